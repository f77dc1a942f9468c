#include "targetwatch/textprep.hpp"

#include "targetwatch/common.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

namespace tw::textprep {

namespace {

// ---- minimal UTF-8 handling -------------------------------------------------

constexpr char32_t kInvalid = 0xFFFD;

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(kInvalid);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(kInvalid);
      break;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kInvalid);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_combining_mark(char32_t c) { return c >= 0x0300 && c <= 0x036F; }

// Latin, Greek and Cyrillic letters; enough for Portuguese and its loanwords.
bool is_letter(char32_t c) {
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return true;
  if (c == 0xAA || c == 0xB5 || c == 0xBA) return true;
  if (c >= 0xC0 && c <= 0x24F) return c != 0xD7 && c != 0xF7;
  if (c >= 0x250 && c <= 0x2AF) return true;
  if (c >= 0x386 && c <= 0x3FF) return c != 0x387 && c != 0x3F6;
  if (c >= 0x400 && c <= 0x52F) return !(c >= 0x482 && c <= 0x489);
  if (c >= 0x1E00 && c <= 0x1EFF) return true;
  return false;
}

bool is_word_char(char32_t c) { return is_letter(c) || is_combining_mark(c); }

bool is_punctuation(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB4: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
      return true;
    default:
      break;
  }
  return c >= 0x2010 && c <= 0x205E;
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c < 0xC0) return c;
  if (c <= 0xDE) return c == 0xD7 ? c : c + 32;
  if (c >= 0x100 && c <= 0x17F) {
    if (c == 0x130) return 'i';
    if (c == 0x178) return 0xFF;
    const bool odd_upper = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
    if (odd_upper) return (c % 2 == 1) ? c + 1 : c;
    if (c == 0x138 || c == 0x149 || c == 0x17F) return c;
    return (c % 2 == 0) ? c + 1 : c;
  }
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c == 0x386) return 0x3AC;
  if (c >= 0x388 && c <= 0x38A) return c + 37;
  if (c == 0x38C) return 0x3CC;
  if (c == 0x38E || c == 0x38F) return c + 63;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if ((c >= 0x460 && c <= 0x481) || (c >= 0x48A && c <= 0x4BF) || (c >= 0x4D0 && c <= 0x52F))
    return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x4C0) return 0x4CF;
  if (c >= 0x4C1 && c <= 0x4CE) return (c % 2 == 1) ? c + 1 : c;
  if ((c >= 0x1E00 && c <= 0x1E95) || (c >= 0x1EA0 && c <= 0x1EFF)) return (c % 2 == 0) ? c + 1 : c;
  return c;
}

// Lowercase input only.
char32_t fold_accent(char32_t c) {
  if (c >= 0xE0 && c <= 0xE5) return 'a';
  if (c == 0xE7) return 'c';
  if (c >= 0xE8 && c <= 0xEB) return 'e';
  if (c >= 0xEC && c <= 0xEF) return 'i';
  if (c == 0xF1) return 'n';
  if ((c >= 0xF2 && c <= 0xF6) || c == 0xF8) return 'o';
  if (c >= 0xF9 && c <= 0xFC) return 'u';
  if (c == 0xFD || c == 0xFF) return 'y';
  return c;
}

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == 0xA0 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x3000;
}

}  // namespace

std::vector<std::string> tokenize_and_clean(std::string_view text, const CleanOptions& options) {
  std::vector<std::string> out;
  const std::vector<char32_t> cps = decode_utf8(text);
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_space(cps[i])) ++i;
    std::size_t begin = i;
    while (i < cps.size() && !is_space(cps[i])) ++i;
    std::size_t end = i;
    if (begin == end) continue;

    while (begin < end && is_punctuation(cps[begin]) && cps[begin] != '@' && cps[begin] != '#') ++begin;
    while (end > begin && is_punctuation(cps[end - 1])) --end;
    if (begin == end) continue;
    if (cps[begin] == '@' || cps[begin] == '#') continue;

    bool alphabetic = true;
    std::size_t letters = 0;
    for (std::size_t k = begin; k < end; ++k) {
      if (!is_word_char(cps[k])) {
        alphabetic = false;
        break;
      }
      if (!is_combining_mark(cps[k])) ++letters;
    }
    if (!alphabetic || letters < 2) continue;

    std::string token;
    for (std::size_t k = begin; k < end; ++k) {
      char32_t c = to_lower(cps[k]);
      if (options.fold_accents) {
        if (is_combining_mark(c)) continue;
        c = fold_accent(c);
      }
      append_utf8(token, c);
    }
    out.push_back(std::move(token));
  }
  return out;
}

// ---- vocabulary ---------------------------------------------------------------

std::size_t Vocabulary::find(std::string_view word) const {
  auto it = std::lower_bound(words.begin(), words.end(), word,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == words.end() || *it != word) return npos;
  return static_cast<std::size_t>(it - words.begin());
}

std::string Vocabulary::fingerprint() const {
  std::string joined;
  for (const auto& w : words) {
    joined += w;
    joined.push_back('\n');
  }
  return sha256_hex(joined);
}

Vocabulary build_vocabulary(std::span<const Document> docs, const CleanOptions& options) {
  if (docs.empty()) throw DataError("cannot build a vocabulary from zero documents");
  std::map<std::string, std::pair<std::uint32_t, std::uint32_t>> freq;
  Vocabulary v;
  for (const auto& doc : docs) {
    if (doc.label != 0 && doc.label != 1) throw DataError("document label must be 0 or 1");
    (doc.label == 1 ? v.n_class1 : v.n_class0)++;
    auto tokens = tokenize_and_clean(doc.text, options);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) {
      auto& f = freq[std::move(t)];
      (doc.label == 1 ? f.first : f.second)++;
    }
  }
  v.words.reserve(freq.size());
  for (auto& [w, f] : freq) {
    v.words.push_back(w);
    v.docs_class1.push_back(f.first);
    v.docs_class0.push_back(f.second);
  }
  return v;
}

double chi2_2x2(double a, double b, double c, double d) {
  const double n = a + b + c + d;
  const double r1 = a + b, r0 = c + d, present = a + c, absent = b + d;
  if (r1 <= 0.0 || r0 <= 0.0 || present <= 0.0 || absent <= 0.0) return 0.0;
  const double cross = a * d - b * c;
  return n * cross * cross / (r1 * r0 * present * absent);
}

double chi2_1_survival(double statistic) {
  if (statistic <= 0.0) return 1.0;
  return std::erfc(std::sqrt(statistic / 2.0));
}

double chi2_1_critical(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("p must lie in (0, 1)");
  double lo = 0.0, hi = 1.0;
  while (chi2_1_survival(hi) > p) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (chi2_1_survival(mid) > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Vocabulary keyness_filter(const Vocabulary& vocab, double p_threshold) {
  if (!(p_threshold > 0.0 && p_threshold < 1.0)) throw ConfigError("keyness p threshold must lie in (0, 1)");
  if (vocab.n_class1 == 0 || vocab.n_class0 == 0)
    throw DataError("keyness filtering needs documents of both classes");
  const double n1 = vocab.n_class1, n0 = vocab.n_class0;
  Vocabulary out;
  out.n_class1 = vocab.n_class1;
  out.n_class0 = vocab.n_class0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const double a = vocab.docs_class1[i], c = vocab.docs_class0[i];
    const double stat = chi2_2x2(a, n1 - a, c, n0 - c);
    const double p = chi2_1_survival(stat);
    if (!(p < p_threshold)) continue;
    out.words.push_back(vocab.words[i]);
    out.docs_class1.push_back(vocab.docs_class1[i]);
    out.docs_class0.push_back(vocab.docs_class0[i]);
    out.chi2.push_back(stat);
    out.p_value.push_back(p);
  }
  return out;
}

// ---- feature matrix --------------------------------------------------------------

std::vector<FeatureMatrix::Entry> FeatureMatrix::row(std::size_t r) const {
  std::vector<Entry> out;
  out.reserve(row_ptr[r + 1] - row_ptr[r]);
  for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) out.push_back({col_idx[k], values[k]});
  return out;
}

double FeatureMatrix::value(std::size_t r, std::size_t c) const {
  auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
  auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
  auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(c));
  if (it == last || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows_wanted) const {
  FeatureMatrix out;
  out.cols = cols;
  out.fingerprint = fingerprint;
  for (std::size_t r : rows_wanted) {
    if (r >= rows()) throw std::out_of_range("row index out of range");
    if (!row_ids.empty()) out.row_ids.push_back(row_ids[r]);
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      out.col_idx.push_back(col_idx[k]);
      out.values.push_back(values[k]);
    }
    out.row_ptr.push_back(out.col_idx.size());
  }
  return out;
}

std::vector<double> FeatureMatrix::dense_row(std::size_t r) const {
  std::vector<double> out(cols, 0.0);
  for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) out[col_idx[k]] = values[k];
  return out;
}

FeatureMatrix vectorize(std::span<const std::string> ids, std::span<const std::string_view> texts,
                        const Vocabulary& vocab, const VectorizeOptions& options) {
  if (vocab.size() == 0) throw DataError("cannot vectorize against an empty vocabulary");
  if (ids.size() != texts.size()) throw std::invalid_argument("ids and texts differ in length");
  FeatureMatrix m;
  m.cols = vocab.size();
  m.fingerprint = vocab.fingerprint();
  m.row_ids.assign(ids.begin(), ids.end());
  std::unordered_map<std::string_view, std::uint32_t> index;
  index.reserve(vocab.size() * 2);
  for (std::size_t j = 0; j < vocab.size(); ++j) index.emplace(vocab.words[j], static_cast<std::uint32_t>(j));

  std::vector<std::pair<std::uint32_t, double>> entries;
  for (std::string_view text : texts) {
    entries.clear();
    for (const auto& token : tokenize_and_clean(text, options.clean)) {
      auto it = index.find(token);
      if (it != index.end()) entries.emplace_back(it->second, 1.0);
    }
    std::sort(entries.begin(), entries.end());
    for (std::size_t k = 0; k < entries.size();) {
      std::size_t e = k;
      double count = 0.0;
      while (e < entries.size() && entries[e].first == entries[k].first) count += entries[e++].second;
      m.col_idx.push_back(entries[k].first);
      m.values.push_back(options.binary ? 1.0 : count);
      k = e;
    }
    m.row_ptr.push_back(m.col_idx.size());
  }
  return m;
}

// ---- serialization ------------------------------------------------------------------

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const double stat = i < vocab.chi2.size() ? vocab.chi2[i] : 0.0;
    out << vocab.words[i] << '\t' << fmt::format("{}", stat) << '\n';
  }
}

Vocabulary read_vocabulary(std::istream& in) {
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(fmt::format("vocabulary line {}: missing tab", line_no));
    std::string word = line.substr(0, tab);
    const double stat = std::stod(line.substr(tab + 1));
    if (!v.words.empty() && !(v.words.back() < word))
      throw DataError(fmt::format("vocabulary line {}: words not sorted/unique", line_no));
    v.words.push_back(std::move(word));
    v.chi2.push_back(stat);
    v.p_value.push_back(chi2_1_survival(stat));
  }
  v.docs_class1.assign(v.words.size(), 0);
  v.docs_class0.assign(v.words.size(), 0);
  return v;
}

void write_matrix(std::ostream& out, const FeatureMatrix& m) {
  out << m.rows() << ' ' << m.cols << ' ' << m.nnz() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
      out << r << ' ' << m.col_idx[k] << ' ' << fmt::format("{}", m.values[k]) << '\n';
    }
  }
}

FeatureMatrix read_matrix(std::istream& in) {
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz)) throw DataError("matrix header missing");
  FeatureMatrix m;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  std::size_t prev_r = 0, prev_c = 0;
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t r = 0, c = 0;
    double v = 0.0;
    if (!(in >> r >> c >> v)) throw DataError("matrix entry truncated");
    if (r >= rows || c >= cols) throw DataError("matrix entry out of range");
    if (k > 0 && (r < prev_r || (r == prev_r && c <= prev_c)))
      throw DataError("matrix entries not in row-major order");
    prev_r = r;
    prev_c = c;
    m.col_idx.push_back(static_cast<std::uint32_t>(c));
    m.values.push_back(v);
    ++m.row_ptr[r + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

}  // namespace tw::textprep
