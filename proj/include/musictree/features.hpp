// Event types and the integer feature encoding of note / chord sequences.

#ifndef MUSICTREE_FEATURES_HPP
#define MUSICTREE_FEATURES_HPP

#include <Eigen/Dense>
#include <boost/rational.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace musictree {

// All temporal quantities are exact rationals; grid membership tests are
// ill-posed in floating point.
using Rational = boost::rational<std::int64_t>;

std::string to_string(const Rational& r);

struct FeatureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ChordParseError : FeatureError {
  using FeatureError::FeatureError;
};
struct UnknownNumeratorError : FeatureError {
  using FeatureError::FeatureError;
};
struct UnknownDurationError : FeatureError {
  using FeatureError::FeatureError;
};
struct OutOfVocabError : FeatureError {
  using FeatureError::FeatureError;
};

inline constexpr int kRestPitchCode = 128;

// A note or rest. Durations are normalized by the measure length and may
// exceed 1 (tied notes are merged); bar_position is the onset position in
// [0, 1).
struct NoteEvent {
  std::optional<int> pitch;  // MIDI pitch in [0, 127]; nullopt = rest
  Rational duration_measures;
  Rational bar_position;
  int ts_numerator = 4;

  bool is_rest() const { return !pitch.has_value(); }
};

// Chord forms and extensions, in vocabulary order.
enum ChordForm : int {
  kMajor = 0,
  kMinor = 1,
  kAugmented = 2,
  kHalfDiminished = 3,
  kDiminished = 4,
  kSus = 5,
};
enum ChordExtension : int {
  kSixth = 0,
  kMinorSeventh = 1,
  kMajorSeventh = 2,
};

struct ChordEvent {
  int root_pc = 0;     // pitch class in [0, 11]
  int form = kMajor;   // [0, 5]
  int extension = kSixth;  // [0, 2]
  Rational duration_measures;
  Rational bar_position;
  int ts_numerator = 4;
};

enum class SequenceKind { kMelody, kChords };

struct EventSequence {
  SequenceKind kind = SequenceKind::kMelody;
  std::vector<NoteEvent> notes;    // used when kind == kMelody
  std::vector<ChordEvent> chords;  // used when kind == kChords

  int size() const {
    return kind == SequenceKind::kMelody ? static_cast<int>(notes.size())
                                         : static_cast<int>(chords.size());
  }
  bool is_rest(int i) const {
    return kind == SequenceKind::kMelody && notes.at(i).is_rest();
  }
  std::vector<bool> rest_flags() const;
};

// MIDI pitch, or 128 for a rest.
int encode_note_static(const NoteEvent& e);

// Chord grammar: <root><form><extension> with root A..G plus optional # or
// b, form in {"", "m", "+", "%", "o", "sus"} and extension in
// {"6", "7", "^7", ""} (absent defaults to the 6 class).
struct ChordSymbol {
  int root_pc;
  int form;
  int extension;
};
ChordSymbol parse_chord_symbol(const std::string& s);
std::string format_chord_symbol(int root_pc, int form, int extension);

// Per-numerator metrical division templates. The defaults cover the
// simple and compound meters of the corpora and can be overridden.
class MetricalTemplateTable {
 public:
  static constexpr int kLevels = 5;

  MetricalTemplateTable();  // default table
  explicit MetricalTemplateTable(std::map<int, std::array<int, kLevels>> table);

  const std::array<int, kLevels>& divisions(int numerator) const;
  // Grid step at each level: 1 / prod(m[0..l]).
  std::array<Rational, kLevels> grid_steps(int numerator) const;
  // Smallest grid level containing t, or kLevels if t is off every grid.
  int inverse_metrical_strength(const Rational& t, int numerator) const;

  const std::map<int, std::array<int, kLevels>>& table() const { return table_; }

 private:
  std::map<int, std::array<int, kLevels>> table_;
};

// Convenience wrappers over a shared default table.
std::array<int, MetricalTemplateTable::kLevels> metrical_template(int numerator);
int inverse_metrical_strength(const Rational& t, int numerator);

// Ascending list of all distinct durations seen in a corpus; encodes each
// element's duration as its index on the list.
class DurationVocab {
 public:
  DurationVocab() = default;
  explicit DurationVocab(std::vector<Rational> durations);  // dedupes + sorts

  static DurationVocab from_corpus(const std::vector<EventSequence>& corpus);

  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<Rational>& values() const { return values_; }

  // Index of d. When strict, unseen durations raise UnknownDurationError;
  // otherwise they map to the nearest entry, ties toward the shorter.
  int index_of(const Rational& d, bool strict = false) const;

 private:
  std::vector<Rational> values_;
};

// lambda x phi integer matrix. Columns: notes [static, duration index,
// metrical strength]; chords [root, form, extension, duration index,
// metrical strength].
using FeatureMatrix = Eigen::MatrixXi;

inline constexpr int kNoteFeatureCount = 3;
inline constexpr int kChordFeatureCount = 5;
inline constexpr int kMetricalStrengthCount = 6;  // values 0..5

FeatureMatrix extract_features(const EventSequence& seq, const DurationVocab& vocab,
                               const MetricalTemplateTable& table,
                               bool strict_durations = false);
FeatureMatrix extract_features(const EventSequence& seq, const DurationVocab& vocab,
                               bool strict_durations = false);

// Per-feature vocabulary sizes for a sequence kind, in column order.
std::vector<int> feature_vocab_sizes(SequenceKind kind, int duration_vocab_size);

}  // namespace musictree

#endif  // MUSICTREE_FEATURES_HPP
