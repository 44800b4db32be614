#include "oracles.hpp"

#include <random>
#include <sstream>

#include <Eigen/Dense>

namespace oracle {

using namespace mlsent;

const std::vector<CleanCase>& golden_clean_cases() {
  static const std::vector<CleanCase> cases = {
      {"Hello World", "hello world", "lowercase"},
      {"Check https://t.co/abc now", "check now", "url https"},
      {"see http://example.org/x?y=1 ok", "see ok", "url http with query"},
      {"visit www.example.com today", "visit today", "url www"},
      {"@john thanks!", "thanks", "mention + punctuation"},
      {"Loving it #blessed #2024", "loving it", "hashtags incl. numeric"},
      {"e-mail me at foo@bar.com", "mail me at foo com", "embedded @ + single char"},
      {"I have 3 cats", "have cats", "digit + single char"},
      {"abc123def", "abcdef", "digits inside a word"},
      {"a b c d", "", "only single chars"},
      {"  multiple   spaces\there  ", "multiple spaces here", "whitespace collapse + trim"},
      {"Don't stop", "don stop", "apostrophe splits, single char removed"},
      {"price: $5.99!!!", "price", "symbols and digits"},
      {"不良品が届きました", "不良品が届きました", "ja preserved"},
      {"这个产品很好！", "这个产品很好", "zh preserved, fullwidth punctuation"},
      {"좋아요 @user 최고", "좋아요 최고", "ko preserved, mention"},
      {"x 猫 y", "猫", "single Latin removed, single CJK kept"},
      {"2024年3月", "年月", "digits next to CJK"},
      {"Café RÉSUMÉ", "café résumé", "accented lowercase"},
      {"Straße", "strasse", "full case folding"},
      {"ＡＢＣ１２３", "ａｂｃ", "fullwidth letters and digits"},
      {"http://a.com", "", "text that is only a url"},
      {"C'est génial #top", "est génial", "fr elision + hashtag"},
  };
  return cases;
}

Scores brute_force_scores(const ConfusionMatrix& cm) {
  std::vector<std::pair<int, int>> pairs;
  for (int t = 0; t < 3; ++t)
    for (int p = 0; p < 3; ++p)
      for (std::size_t k = 0; k < cm.counts[t][p]; ++k) pairs.emplace_back(t, p);

  Scores s;
  s.n = pairs.size();
  std::size_t correct = 0;
  for (auto [t, p] : pairs) correct += t == p;
  s.accuracy = double(correct) / double(pairs.size());
  double psum = 0, rsum = 0, fsum = 0;
  for (int c = 0; c < 3; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (auto [t, p] : pairs) {
      if (p == c && t == c) ++tp;
      if (p == c && t != c) ++fp;
      if (p != c && t == c) ++fn;
    }
    double prec = 0, rec = 0, f1 = 0;
    if (tp + fp) prec = double(tp) / double(tp + fp);
    else ++s.zero_division_warnings;
    if (tp + fn) rec = double(tp) / double(tp + fn);
    else ++s.zero_division_warnings;
    if (prec + rec > 0) f1 = 2 * prec * rec / (prec + rec);
    else ++s.zero_division_warnings;
    s.per_class[c] = {prec, rec, f1, tp + fn};
    psum += prec;
    rsum += rec;
    fsum += f1;
  }
  s.precision = psum / 3;
  s.recall = rsum / 3;
  s.f1 = fsum / 3;
  s.micro_precision = s.micro_recall = s.accuracy;
  return s;
}

WlsSolution eigen_wls(const limex::MaskMatrix& z, const std::vector<double>& y, const std::vector<double>& w,
                      double lambda) {
  const auto n = Eigen::Index(z.rows), p = Eigen::Index(z.cols);
  Eigen::MatrixXd X(n, p + 1);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sw = std::sqrt(w[i]);
    X(i, 0) = sw;
    for (Eigen::Index j = 0; j < p; ++j) X(i, j + 1) = sw * z.data[i * z.cols + j];
    Y(i) = sw * y[i];
  }
  Eigen::MatrixXd A = X.transpose() * X;
  for (Eigen::Index j = 1; j <= p; ++j) A(j, j) += lambda;
  const Eigen::VectorXd theta = A.completeOrthogonalDecomposition().solve(X.transpose() * Y);
  WlsSolution out;
  out.intercept = theta(0);
  for (Eigen::Index j = 0; j < p; ++j) out.coefficients.push_back(theta(j + 1));
  return out;
}

ClassifierProbe affine_probe(double intercept, std::vector<double> beta, Label target) {
  return ClassifierProbe("affine", [=](std::span<const std::string> batch) {
    std::vector<ProbaRow> rows;
    for (const auto& text : batch) {
      std::istringstream in(text);
      std::string tok;
      double p = intercept;
      while (in >> tok) {
        if (tok.size() > 1 && tok[0] == 'w') p += beta.at(std::stoul(tok.substr(1)));
      }
      ProbaRow r{};
      const std::size_t t = index_of(target);
      for (std::size_t c = 0; c < 3; ++c) r[c] = c == t ? p : (1.0 - p) / 2.0;
      rows.push_back(r);
    }
    return rows;
  });
}

std::string random_unicode_string(std::uint64_t seed) {
  static const std::vector<std::string> pieces = {
      "a", "B", "z", "É", "ß", "ı", "İ", " ", "  ", "\t", "\n", "@", "#", "_", "!", "?", ".", ",", "'",
      "-", "0", "7", "١", "٣", "ＡＢ", "１", "http://", "https://", "www.", "/", ":", "猫", "不良品", "ー",
      "々", "한국", "ü", "é", "́", "😀", "x", "ab", "The", "le", "$", "%", " ", "　"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(0, 24), pick(0, pieces.size() - 1);
  std::string s;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) s += pieces[pick(rng)];
  return s;
}

}  // namespace oracle
