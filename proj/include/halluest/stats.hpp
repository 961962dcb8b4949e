#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "halluest/distributions.hpp"
#include "halluest/error.hpp"
#include "halluest/optimize.hpp"

namespace halluest::stats {

enum class TestKind { Pearson, TTest, LikelihoodRatio };

inline std::string_view to_string(TestKind k) {
  switch (k) {
    case TestKind::Pearson: return "pearson";
    case TestKind::TTest: return "ttest";
    case TestKind::LikelihoodRatio: return "lr";
  }
  return "unknown";
}

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  TestKind kind = TestKind::Pearson;
};

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

/// Product-moment correlation with a two-sided p-value from
/// t = r sqrt((n-2)/(1-r^2)) on n-2 degrees of freedom.
inline Correlation pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "x and y differ in length");
  if (x.size() < 3) throw Error(ErrorKind::TooFewPoints, "pearson needs at least 3 points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::ConstantVector, "constant input vector");
  Correlation c;
  c.n = x.size();
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(x.size()) - 2.0;
  if (std::fabs(c.r) == 1.0) {
    c.p_value = 0.0;
  } else {
    const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    c.p_value = dist::student_t_two_sided(t, df);
  }
  return c;
}

enum class TTestVariant { Pooled, Welch };

inline TTestVariant variant_from_string(std::string_view s) {
  if (s == "pooled") return TTestVariant::Pooled;
  if (s == "welch") return TTestVariant::Welch;
  throw Error(ErrorKind::InvalidParams, "unknown t-test variant '" + std::string(s) + "'");
}

/// Two-sample t-test, two-sided; the statistic follows mean(a) - mean(b).
inline TestResult ttest_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                   TTestVariant variant = TTestVariant::Pooled) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorKind::TooFewPoints, "each sample needs at least 2 values");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double diff = mean(a) - mean(b);
  const double va = sample_variance(a);
  const double vb = sample_variance(b);
  TestResult r;
  r.kind = TestKind::TTest;
  double se2 = 0.0;
  if (variant == TTestVariant::Pooled) {
    r.df = na + nb - 2.0;
    const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
    se2 = sp2 * (1.0 / na + 1.0 / nb);
  } else {
    const double qa = va / na;
    const double qb = vb / nb;
    se2 = qa + qb;
    r.df = se2 > 0.0 ? se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0)) : na + nb - 2.0;
  }
  if (se2 == 0.0) {
    r.statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.p_value = diff == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = diff / std::sqrt(se2);
  r.p_value = dist::student_t_two_sided(r.statistic, r.df);
  return r;
}

inline constexpr const char* kConvergesToOls = "converges-to-ols";
inline constexpr const char* kBoundary = "boundary";
inline constexpr const char* kPerfectFit = "perfect-fit";

struct ModelFit {
  std::vector<std::string> names;
  Eigen::VectorXd betas;
  Eigen::VectorXd std_errors;
  double sigma2 = 0.0;
  double sigma_b2 = 0.0;
  double lambda = 0.0;
  double loglik = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t n_groups = 0;
  std::vector<std::string> flags;
  std::uint64_t row_signature = 0;

  double beta(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return betas[static_cast<Eigen::Index>(i)];
    }
    throw Error(ErrorKind::InvalidParams, "no coefficient named '" + name + "'");
  }
  double std_error(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return std_errors[static_cast<Eigen::Index>(i)];
    }
    throw Error(ErrorKind::InvalidParams, "no coefficient named '" + name + "'");
  }
  bool has_flag(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
  }
};

/// FNV-1a over the response values and group ids, used to check that two
/// fits saw identical rows.
inline std::uint64_t row_signature(const Eigen::VectorXd& y, const std::vector<int>& groups = {}) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y[i];
    mix(&v, sizeof v);
  }
  for (int g : groups) mix(&g, sizeof g);
  return h;
}

inline std::vector<std::string> default_names(Eigen::Index p) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

/// Ordinary least squares with the ML variance RSS/n and Gaussian
/// log-likelihood.
inline ModelFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        std::vector<std::string> names = {}) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (y.size() != n) throw Error(ErrorKind::DimensionMismatch, "X rows differ from y length");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != p) {
    throw Error(ErrorKind::DimensionMismatch, "coefficient names differ from X columns");
  }
  if (n <= p) throw Error(ErrorKind::RankDeficient, "need more rows than columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) throw Error(ErrorKind::RankDeficient, "design is not full column rank");

  ModelFit fit;
  fit.names = names.empty() ? default_names(p) : std::move(names);
  fit.betas = qr.solve(y);
  const Eigen::VectorXd resid = y - X * fit.betas;
  const double rss = resid.squaredNorm();
  fit.n = static_cast<std::size_t>(n);
  fit.p = static_cast<std::size_t>(p);
  fit.n_groups = 1;
  fit.sigma2 = rss / static_cast<double>(n);
  fit.row_signature = row_signature(y);
  const Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.std_errors = (fit.sigma2 * xtx_inv.diagonal()).cwiseSqrt();
  if (fit.sigma2 <= 0.0) {
    fit.flags.emplace_back(kPerfectFit);
    fit.loglik = std::numeric_limits<double>::infinity();
  } else {
    const double nd = static_cast<double>(n);
    fit.loglik = -0.5 * nd * (std::log(2.0 * std::numbers::pi * fit.sigma2) + 1.0);
  }
  return fit;
}

/// Random-intercept model y = X b + Z u + e, u ~ N(0, s_b^2 I), e ~ N(0, s^2 I),
/// with the likelihood profiled over lambda = s_b^2 / s^2. Per-group
/// sufficient statistics make each evaluation O(groups * p^2).
class ProfiledRandomIntercept {
 public:
  ProfiledRandomIntercept(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<int>& groups)
      : n_(X.rows()), p_(X.cols()) {
    if (y.size() != n_ || static_cast<Eigen::Index>(groups.size()) != n_) {
      throw Error(ErrorKind::DimensionMismatch, "X, y and groups differ in length");
    }
    xtx_ = X.transpose() * X;
    xty_ = X.transpose() * y;
    yty_ = y.squaredNorm();
    std::map<int, std::size_t> index;
    for (Eigen::Index i = 0; i < n_; ++i) {
      auto [it, inserted] = index.try_emplace(groups[static_cast<std::size_t>(i)], sizes_.size());
      if (inserted) {
        sizes_.push_back(0.0);
        xsum_.push_back(Eigen::VectorXd::Zero(p_));
        ysum_.push_back(0.0);
      }
      const std::size_t g = it->second;
      sizes_[g] += 1.0;
      xsum_[g] += X.row(i).transpose();
      ysum_[g] += y[i];
    }
  }

  struct Point {
    double neg2ll = 0.0;
    double sigma2 = 0.0;
    Eigen::VectorXd beta;
    Eigen::MatrixXd a;  // X' H^-1 X
  };

  Point evaluate(double lambda) const {
    Eigen::MatrixXd a = xtx_;
    Eigen::VectorXd b = xty_;
    double quad = yty_;
    double logdet = 0.0;
    for (std::size_t g = 0; g < sizes_.size(); ++g) {
      const double c = lambda / (1.0 + lambda * sizes_[g]);
      a.noalias() -= c * xsum_[g] * xsum_[g].transpose();
      b -= c * ysum_[g] * xsum_[g];
      quad -= c * ysum_[g] * ysum_[g];
      logdet += std::log1p(lambda * sizes_[g]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(ErrorKind::SingularDesign, "X' H^-1 X is not positive definite");
    }
    Point pt;
    pt.beta = ldlt.solve(b);
    const double nd = static_cast<double>(n_);
    pt.sigma2 = std::max((quad - b.dot(pt.beta)) / nd, 0.0);
    pt.neg2ll = nd * std::log(2.0 * std::numbers::pi * pt.sigma2) + nd + logdet;
    pt.a = std::move(a);
    return pt;
  }

  std::size_t group_count() const { return sizes_.size(); }
  Eigen::Index rows() const { return n_; }
  Eigen::Index cols() const { return p_; }

 private:
  Eigen::Index n_;
  Eigen::Index p_;
  Eigen::MatrixXd xtx_;
  Eigen::VectorXd xty_;
  double yty_ = 0.0;
  std::vector<double> sizes_;
  std::vector<Eigen::VectorXd> xsum_;
  std::vector<double> ysum_;
};

struct LmmOptions {
  double log10_lambda_min = -8.0;
  double log10_lambda_max = 8.0;
  int grid_points = 65;
  double rel_tol = 1e-8;
  std::size_t max_iter = 500;
};

/// ML fit of the random-intercept model. beta and sigma^2 are profiled out
/// analytically; log10(lambda) is located on a coarse grid and refined with
/// Brent's method to a relative tolerance of 1e-8. lambda = 0 is also checked so the boundary fit is exact.
inline ModelFit fit_random_intercept(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const std::vector<int>& groups,
                                     std::vector<std::string> names = {},
                                     const LmmOptions& opt = {}) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != p) {
    throw Error(ErrorKind::DimensionMismatch, "coefficient names differ from X columns");
  }
  if (n <= p) throw Error(ErrorKind::SingularDesign, "need more rows than columns");
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) throw Error(ErrorKind::SingularDesign, "design is not full column rank");
  }
  const ProfiledRandomIntercept model(X, y, groups);

  double best_lambda = 0.0;
  std::vector<std::string> flags;
  if (model.group_count() < 2) {
    flags.emplace_back(kConvergesToOls);
  } else {
    auto objective = [&](double u) { return model.evaluate(std::pow(10.0, u)).neg2ll; };
    const double lo = opt.log10_lambda_min;
    const double hi = opt.log10_lambda_max;
    const int m = std::max(opt.grid_points, 3);
    const double step = (hi - lo) / (m - 1);
    int best_k = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
      const double v = objective(lo + step * k);
      if (v < best_val) {
        best_val = v;
        best_k = k;
      }
    }
    const double a = lo + step * std::max(best_k - 1, 0);
    const double b = lo + step * std::min(best_k + 1, m - 1);
    const auto res = optimize::brent_minimize(objective, a, b, opt.rel_tol, 1e-12, opt.max_iter);
    const double u_star = res.x;
    const double f_star = res.fx;
    if (!res.converged) {
      const double h = 1e-5;
      const double grad = (objective(u_star + h) - objective(u_star - h)) / (2.0 * h);
      throw Error(ErrorKind::NonConvergence,
                  "Brent search exhausted at log10(lambda)=" + std::to_string(u_star) +
                      ", |gradient|=" + std::to_string(std::fabs(grad)));
    }
    best_lambda = std::pow(10.0, u_star);
    if (model.evaluate(0.0).neg2ll <= f_star) {
      best_lambda = 0.0;
      flags.emplace_back(kBoundary);
    }
  }

  const auto pt = model.evaluate(best_lambda);
  ModelFit fit;
  fit.names = names.empty() ? default_names(p) : std::move(names);
  fit.betas = pt.beta;
  fit.sigma2 = pt.sigma2;
  fit.lambda = best_lambda;
  fit.sigma_b2 = best_lambda * pt.sigma2;
  fit.loglik = -0.5 * pt.neg2ll;
  fit.n = static_cast<std::size_t>(n);
  fit.p = static_cast<std::size_t>(p);
  fit.n_groups = model.group_count();
  fit.flags = std::move(flags);
  fit.row_signature = row_signature(y, groups);
  const Eigen::MatrixXd a_inv = pt.a.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.std_errors = (pt.sigma2 * a_inv.diagonal()).cwiseSqrt();
  if (pt.sigma2 <= 0.0) fit.flags.emplace_back(kPerfectFit);
  return fit;
}

/// Likelihood-ratio test between nested ML fits; df is the difference in
/// fixed-effect counts.
inline TestResult lr_test(const ModelFit& full, const ModelFit& reduced) {
  const std::set<std::string> full_names(full.names.begin(), full.names.end());
  for (const auto& nm : reduced.names) {
    if (!full_names.count(nm)) {
      throw Error(ErrorKind::NotNested, "reduced term '" + nm + "' absent from full model");
    }
  }
  if (reduced.p > full.p) throw Error(ErrorKind::NotNested, "reduced model has more parameters");
  if (full.n != reduced.n || full.row_signature != reduced.row_signature) {
    throw Error(ErrorKind::RowMismatch, "models were fit on different rows");
  }
  TestResult r;
  r.kind = TestKind::LikelihoodRatio;
  r.df = static_cast<double>(full.p - reduced.p);
  r.statistic = std::max(0.0, 2.0 * (full.loglik - reduced.loglik));
  r.p_value = r.df > 0.0 ? dist::chi_square_sf(r.statistic, r.df) : 1.0;
  return r;
}

/// Likelihood-ratio test from a log-likelihood gap directly.
inline TestResult lr_test(double loglik_full, double loglik_reduced, double df) {
  if (!(df > 0.0)) throw Error(ErrorKind::InvalidParams, "df must be positive");
  TestResult r;
  r.kind = TestKind::LikelihoodRatio;
  r.df = df;
  r.statistic = std::max(0.0, 2.0 * (loglik_full - loglik_reduced));
  r.p_value = dist::chi_square_sf(r.statistic, df);
  return r;
}

// ---------------------------------------------------------------------------
// Analysis frames

struct AnalysisRow {
  double rate = 0.0;
  int size_class = 0;  // 0 = small, 1 = large
  double n_supported_langs = 0.0;
  double mean_response_len = 0.0;
  std::string language;
  std::string model_id;
};

using AnalysisFrame = std::vector<AnalysisRow>;

inline constexpr std::array<std::string_view, 6> kFrameColumns = {
    "rate", "size_class", "n_supported_langs", "mean_response_len", "language", "model_id"};

inline bool is_numeric_column(std::string_view c) {
  return c == "rate" || c == "size_class" || c == "n_supported_langs" ||
         c == "mean_response_len";
}

inline double numeric_value(const AnalysisRow& r, std::string_view column) {
  if (column == "rate") return r.rate;
  if (column == "size_class") return r.size_class;
  if (column == "n_supported_langs") return r.n_supported_langs;
  if (column == "mean_response_len") return r.mean_response_len;
  throw Error(ErrorKind::InvalidParams, "'" + std::string(column) + "' is not a numeric column");
}

inline std::vector<double> column(const AnalysisFrame& f, std::string_view name) {
  std::vector<double> out;
  out.reserve(f.size());
  for (const auto& r : f) out.push_back(numeric_value(r, name));
  return out;
}

inline const std::string& label_value(const AnalysisRow& r, std::string_view column) {
  if (column == "language") return r.language;
  if (column == "model_id") return r.model_id;
  throw Error(ErrorKind::InvalidParams, "'" + std::string(column) + "' is not a label column");
}

/// Splits one CSV record; handles double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline double parse_double(const std::string& s, std::size_t line, const std::string& col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::SchemaViolation, "column '" + col + "' is not numeric: '" + s + "'",
                line);
  }
}

/// Reads an analysis frame. The header must name the six frame columns
/// exactly (any order); size_class accepts small/large or 0/1.
inline AnalysisFrame read_frame_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::SchemaViolation, "missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) pos[header[i]] = i;
  for (auto c : kFrameColumns) {
    if (!pos.count(std::string(c))) {
      throw Error(ErrorKind::SchemaViolation, "header lacks column '" + std::string(c) + "'", 1);
    }
  }
  AnalysisFrame frame;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::SchemaViolation, "expected " + std::to_string(header.size()) +
                                                  " cells, got " + std::to_string(cells.size()),
                  lineno);
    }
    auto cell = [&](const char* name) -> const std::string& { return cells[pos.at(name)]; };
    AnalysisRow r;
    r.rate = parse_double(cell("rate"), lineno, "rate");
    const auto& sc = cell("size_class");
    if (sc == "small" || sc == "0") r.size_class = 0;
    else if (sc == "large" || sc == "1") r.size_class = 1;
    else throw Error(ErrorKind::SchemaViolation, "size_class must be small|large|0|1", lineno);
    r.n_supported_langs = parse_double(cell("n_supported_langs"), lineno, "n_supported_langs");
    r.mean_response_len = parse_double(cell("mean_response_len"), lineno, "mean_response_len");
    r.language = cell("language");
    r.model_id = cell("model_id");
    if (r.language.empty() || r.model_id.empty()) {
      throw Error(ErrorKind::SchemaViolation, "empty language or model_id", lineno);
    }
    frame.push_back(std::move(r));
  }
  return frame;
}

/// Fixed-effects specification: response column plus terms, where a term is
/// a numeric column or an interaction "a:b". The intercept is implicit.
struct FixedSpec {
  std::string response = "rate";
  std::vector<std::string> terms;
  bool standardize = true;  // z-score continuous predictors; size_class stays 0/1
};

inline FixedSpec main_effects() {
  return {"rate", {"size_class", "n_supported_langs", "mean_response_len"}, true};
}

inline FixedSpec with_two_way_interactions() {
  auto spec = main_effects();
  spec.terms.insert(spec.terms.end(), {"size_class:n_supported_langs",
                                       "size_class:mean_response_len",
                                       "n_supported_langs:mean_response_len"});
  return spec;
}

struct Design {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;
  std::vector<int> groups;
  std::vector<std::string> group_labels;
};

inline std::vector<double> z_score(const std::vector<double>& v) {
  const double m = mean(v);
  const double sd = std::sqrt(sample_variance(v));
  std::vector<double> out(v.size(), 0.0);
  if (sd == 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - m) / sd;
  return out;
}

inline Design build_design(const AnalysisFrame& frame, const FixedSpec& spec,
                           const std::string& group_by = "language") {
  if (frame.size() < 2) throw Error(ErrorKind::TooFewPoints, "frame needs at least 2 rows");
  std::map<std::string, std::vector<double>> coded;
  auto coded_column = [&](const std::string& name) -> const std::vector<double>& {
    auto it = coded.find(name);
    if (it != coded.end()) return it->second;
    if (!is_numeric_column(name) || name == spec.response) {
      throw Error(ErrorKind::InvalidParams, "unknown predictor '" + name + "'");
    }
    auto values = column(frame, name);
    if (spec.standardize && name != "size_class") values = z_score(values);
    return coded.emplace(name, std::move(values)).first->second;
  };

  Design d;
  const auto n = static_cast<Eigen::Index>(frame.size());
  d.X.resize(n, static_cast<Eigen::Index>(spec.terms.size() + 1));
  d.X.col(0).setOnes();
  d.names.push_back("(Intercept)");
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const auto& term = spec.terms[t];
    const auto col = static_cast<Eigen::Index>(t + 1);
    const auto colon = term.find(':');
    if (colon == std::string::npos) {
      const auto& v = coded_column(term);
      for (Eigen::Index i = 0; i < n; ++i) d.X(i, col) = v[static_cast<std::size_t>(i)];
    } else {
      const auto& a = coded_column(term.substr(0, colon));
      const auto& b = coded_column(term.substr(colon + 1));
      for (Eigen::Index i = 0; i < n; ++i) {
        d.X(i, col) = a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
      }
    }
    d.names.push_back(term);
  }
  const auto y = column(frame, spec.response);
  d.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

  std::map<std::string, int> ids;
  for (const auto& r : frame) {
    const auto& key = label_value(r, group_by);
    auto [it, inserted] = ids.try_emplace(key, static_cast<int>(d.group_labels.size()));
    if (inserted) d.group_labels.push_back(key);
    d.groups.push_back(it->second);
  }
  return d;
}

/// Random-intercept LMM over an analysis frame, grouped by `group_by`.
inline ModelFit fit_lmm(const AnalysisFrame& frame, const FixedSpec& spec,
                        const std::string& group_by = "language", const LmmOptions& opt = {}) {
  auto d = build_design(frame, spec, group_by);
  return fit_random_intercept(d.X, d.y, d.groups, std::move(d.names), opt);
}

}  // namespace halluest::stats
