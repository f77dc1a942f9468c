#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tw::textprep {

struct CleanOptions {
  bool fold_accents = false;
};

/// Whitespace split, edge punctuation stripped, then drops @mentions,
/// #hashtags, one-letter tokens and anything with a non-letter code point.
/// Survivors are lowercased.
std::vector<std::string> tokenize_and_clean(std::string_view text, const CleanOptions& options = {});

/// A document with a binary class label (1 = abusive).
struct Document {
  std::string_view text;
  int label = 0;
};

/// Sorted, duplicate-free word list. The per-word arrays are parallel to `words`.
struct Vocabulary {
  std::vector<std::string> words;
  std::vector<std::uint32_t> docs_class1;  // documents of class 1 containing the word
  std::vector<std::uint32_t> docs_class0;
  std::uint32_t n_class1 = 0;  // documents per class
  std::uint32_t n_class0 = 0;
  std::vector<double> chi2;     // filled by keyness_filter
  std::vector<double> p_value;  // filled by keyness_filter

  std::size_t size() const noexcept { return words.size(); }
  /// Column index of a word, or npos.
  std::size_t find(std::string_view word) const;
  /// SHA-256 over the ordered word list.
  std::string fingerprint() const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

Vocabulary build_vocabulary(std::span<const Document> docs, const CleanOptions& options = {});

/// Pearson chi-squared statistic of a 2x2 table, closed form, no continuity
/// correction. a,b: class-1 present/absent; c,d: class-0 present/absent.
/// Returns 0 when any margin is zero.
double chi2_2x2(double a, double b, double c, double d);

/// Upper-tail probability of chi-squared with one degree of freedom.
double chi2_1_survival(double statistic);

/// Statistic above which chi2_1_survival falls below p.
double chi2_1_critical(double p);

/// Keeps words whose document-level association with the label has p < p_threshold.
Vocabulary keyness_filter(const Vocabulary& vocab, double p_threshold = 0.20);

/// Sparse posts x words count matrix in compressed-row form.
struct FeatureMatrix {
  std::vector<std::string> row_ids;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;
  std::string fingerprint;  // vocabulary fingerprint of the columns

  std::size_t rows() const noexcept { return row_ptr.size() - 1; }
  std::size_t nnz() const noexcept { return col_idx.size(); }

  struct Entry {
    std::uint32_t col;
    double value;
  };
  /// Entries of row r in increasing column order.
  std::vector<Entry> row(std::size_t r) const;
  double value(std::size_t r, std::size_t c) const;
  /// Copies the selected rows, in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  std::vector<double> dense_row(std::size_t r) const;
};

struct VectorizeOptions {
  CleanOptions clean;
  bool binary = false;
};

/// ids and texts are parallel.
FeatureMatrix vectorize(std::span<const std::string> ids, std::span<const std::string_view> texts,
                        const Vocabulary& vocab, const VectorizeOptions& options = {});

/// "word<TAB>chi2" per line, vocabulary order.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in);

/// Header "rows cols nnz", then one "row col count" triple per line (0-based).
void write_matrix(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_matrix(std::istream& in);

}  // namespace tw::textprep
