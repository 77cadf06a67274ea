#include "musictree/features.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>

namespace musictree {

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

std::vector<bool> EventSequence::rest_flags() const {
  std::vector<bool> flags(size(), false);
  if (kind == SequenceKind::kMelody)
    for (int i = 0; i < size(); ++i) flags[i] = notes[i].is_rest();
  return flags;
}

int encode_note_static(const NoteEvent& e) {
  if (e.is_rest()) return kRestPitchCode;
  return *e.pitch;
}

namespace {

const std::array<int, 7> kLetterPitchClass = {9, 11, 0, 2, 4, 5, 7};  // A..G

}  // namespace

ChordSymbol parse_chord_symbol(const std::string& s) {
  size_t pos = 0;
  auto fail = [&](const std::string& what) -> ChordParseError {
    return ChordParseError("cannot parse chord symbol \"" + s + "\": " + what);
  };
  if (s.empty()) throw fail("empty symbol");
  const char letter = s[pos];
  if (letter < 'A' || letter > 'G') throw fail("bad root letter \"" + std::string(1, letter) + "\"");
  int root = kLetterPitchClass[letter - 'A'];
  ++pos;
  if (pos < s.size() && (s[pos] == '#' || s[pos] == 'b')) {
    root = (root + (s[pos] == '#' ? 1 : 11)) % 12;
    ++pos;
  }
  int form = kMajor;
  if (s.compare(pos, 3, "sus") == 0) {
    form = kSus;
    pos += 3;
  } else if (pos < s.size()) {
    switch (s[pos]) {
      case 'm': form = kMinor; ++pos; break;
      case '+': form = kAugmented; ++pos; break;
      case '%': form = kHalfDiminished; ++pos; break;
      case 'o': form = kDiminished; ++pos; break;
      default: break;
    }
  }
  int extension = kSixth;
  if (pos < s.size()) {
    if (s.compare(pos, 2, "^7") == 0) {
      extension = kMajorSeventh;
      pos += 2;
    } else if (s[pos] == '7') {
      extension = kMinorSeventh;
      ++pos;
    } else if (s[pos] == '6') {
      extension = kSixth;
      ++pos;
    } else {
      throw fail("unexpected \"" + s.substr(pos) + "\"");
    }
  }
  if (pos != s.size()) throw fail("trailing \"" + s.substr(pos) + "\"");
  return {root, form, extension};
}

std::string format_chord_symbol(int root_pc, int form, int extension) {
  static const std::array<const char*, 12> kNames = {"C",  "C#", "D",  "D#", "E",  "F",
                                                     "F#", "G",  "G#", "A",  "A#", "B"};
  static const std::array<const char*, 6> kForms = {"", "m", "+", "%", "o", "sus"};
  static const std::array<const char*, 3> kExts = {"6", "7", "^7"};
  return std::string(kNames.at(root_pc)) + kForms.at(form) + kExts.at(extension);
}

namespace {

std::map<int, std::array<int, MetricalTemplateTable::kLevels>> default_templates() {
  return {
      {2, {1, 2, 2, 2, 2}},  {3, {1, 3, 2, 2, 2}}, {4, {1, 2, 2, 2, 2}},
      {6, {1, 2, 3, 2, 2}},  {9, {1, 3, 3, 2, 2}}, {12, {1, 2, 2, 3, 2}},
  };
}

}  // namespace

MetricalTemplateTable::MetricalTemplateTable() : table_(default_templates()) {}

MetricalTemplateTable::MetricalTemplateTable(std::map<int, std::array<int, kLevels>> table)
    : table_(std::move(table)) {
  for (const auto& [num, m] : table_) {
    if (m[0] != 1)
      throw FeatureError("metrical template for numerator " + std::to_string(num) +
                         " must start with 1");
    for (int v : m)
      if (v < 1)
        throw FeatureError("metrical template for numerator " + std::to_string(num) +
                           " has an entry < 1");
  }
}

const std::array<int, MetricalTemplateTable::kLevels>& MetricalTemplateTable::divisions(
    int numerator) const {
  auto it = table_.find(numerator);
  if (it == table_.end())
    throw UnknownNumeratorError("no metrical template for time signature numerator " +
                                std::to_string(numerator));
  return it->second;
}

std::array<Rational, MetricalTemplateTable::kLevels> MetricalTemplateTable::grid_steps(
    int numerator) const {
  const auto& m = divisions(numerator);
  std::array<Rational, kLevels> steps;
  std::int64_t prod = 1;
  for (int l = 0; l < kLevels; ++l) {
    prod *= m[l];
    steps[l] = Rational(1, prod);
  }
  return steps;
}

int MetricalTemplateTable::inverse_metrical_strength(const Rational& t, int numerator) const {
  const auto& m = divisions(numerator);
  // t / delta_l is integral iff t's reduced denominator divides the
  // cumulative product of divisions.
  const std::int64_t q = t.denominator();
  std::int64_t prod = 1;
  for (int l = 0; l < kLevels; ++l) {
    prod *= m[l];
    if (prod % q == 0) return l;
  }
  return kLevels;
}

namespace {

const MetricalTemplateTable& default_table() {
  static const MetricalTemplateTable table;
  return table;
}

}  // namespace

std::array<int, MetricalTemplateTable::kLevels> metrical_template(int numerator) {
  return default_table().divisions(numerator);
}

int inverse_metrical_strength(const Rational& t, int numerator) {
  return default_table().inverse_metrical_strength(t, numerator);
}

DurationVocab::DurationVocab(std::vector<Rational> durations) {
  std::set<Rational> uniq(durations.begin(), durations.end());
  values_.assign(uniq.begin(), uniq.end());
}

DurationVocab DurationVocab::from_corpus(const std::vector<EventSequence>& corpus) {
  std::vector<Rational> all;
  for (const auto& seq : corpus) {
    if (seq.kind == SequenceKind::kMelody)
      for (const auto& e : seq.notes) all.push_back(e.duration_measures);
    else
      for (const auto& e : seq.chords) all.push_back(e.duration_measures);
  }
  return DurationVocab(std::move(all));
}

int DurationVocab::index_of(const Rational& d, bool strict) const {
  if (values_.empty()) throw UnknownDurationError("empty duration vocabulary");
  auto it = std::lower_bound(values_.begin(), values_.end(), d);
  if (it != values_.end() && *it == d) return static_cast<int>(it - values_.begin());
  if (strict)
    throw UnknownDurationError("duration " + to_string(d) + " is not in the vocabulary");
  // Nearest entry; ties toward the shorter duration.
  if (it == values_.begin()) return 0;
  if (it == values_.end()) return size() - 1;
  const int hi = static_cast<int>(it - values_.begin());
  const int lo = hi - 1;
  const Rational down = d - values_[lo];
  const Rational up = values_[hi] - d;
  return up < down ? hi : lo;
}

FeatureMatrix extract_features(const EventSequence& seq, const DurationVocab& vocab,
                               const MetricalTemplateTable& table, bool strict_durations) {
  const int n = seq.size();
  if (seq.kind == SequenceKind::kMelody) {
    FeatureMatrix x(n, kNoteFeatureCount);
    for (int i = 0; i < n; ++i) {
      const auto& e = seq.notes[i];
      x(i, 0) = encode_note_static(e);
      x(i, 1) = vocab.index_of(e.duration_measures, strict_durations);
      x(i, 2) = table.inverse_metrical_strength(e.bar_position, e.ts_numerator);
    }
    return x;
  }
  FeatureMatrix x(n, kChordFeatureCount);
  for (int i = 0; i < n; ++i) {
    const auto& e = seq.chords[i];
    x(i, 0) = e.root_pc;
    x(i, 1) = e.form;
    x(i, 2) = e.extension;
    x(i, 3) = vocab.index_of(e.duration_measures, strict_durations);
    x(i, 4) = table.inverse_metrical_strength(e.bar_position, e.ts_numerator);
  }
  return x;
}

FeatureMatrix extract_features(const EventSequence& seq, const DurationVocab& vocab,
                               bool strict_durations) {
  return extract_features(seq, vocab, default_table(), strict_durations);
}

std::vector<int> feature_vocab_sizes(SequenceKind kind, int duration_vocab_size) {
  if (kind == SequenceKind::kMelody)
    return {kRestPitchCode + 1, duration_vocab_size, kMetricalStrengthCount};
  return {12, 6, 3, duration_vocab_size, kMetricalStrengthCount};
}

}  // namespace musictree
