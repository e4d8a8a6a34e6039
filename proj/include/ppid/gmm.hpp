#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ppid/common.hpp"
#include "ppid/matrix.hpp"

namespace ppid {

// ---------------------------------------------------------------------------
// Model and configuration
// ---------------------------------------------------------------------------

/// Diagonal-covariance Gaussian mixture.
struct GmmModel {
  std::vector<double> weights;                 // K entries, sum to 1
  std::vector<std::vector<double>> means;      // K x dim
  std::vector<std::vector<double>> variances;  // K x dim, every entry >= floor

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
};

enum class GmmInit { RandomAssignment, FarthestPoint };

struct GmmConfig {
  std::size_t k = 2;
  double epsilon = 1e-6;           // relative log-likelihood change threshold
  std::size_t max_iterations = 200;
  std::uint64_t seed = 0;
  GmmInit init_method = GmmInit::FarthestPoint;
  double variance_floor = 1e-6;

  void validate() const {
    if (k == 0) throw ConfigError("gmm: k must be at least 1");
    if (!(epsilon > 0.0)) throw ConfigError("gmm: epsilon must be positive");
    if (max_iterations < 1) throw ConfigError("gmm: max_iterations must be at least 1");
    if (!(variance_floor > 0.0)) throw ConfigError("gmm: variance_floor must be positive");
  }
};

struct FitTrace {
  std::vector<double> log_likelihood;  // initial model first, then one per E/M pass
  bool converged = false;
  std::size_t iterations_run = 0;
};

struct EStepResult {
  Matrix responsibilities;  // rows x K, each row sums to 1
  double log_likelihood = 0.0;
};

// ---------------------------------------------------------------------------
// Density evaluation (all in log space)
// ---------------------------------------------------------------------------

namespace detail {

constexpr double kLog2Pi = 1.8378770664093454835606594728;

inline double log_diag_gaussian(std::span<const double> x, const std::vector<double>& mean,
                                const std::vector<double>& var) {
  double acc = 0.0;
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const double diff = x[d] - mean[d];
    acc += -0.5 * (kLog2Pi + std::log(var[d])) - diff * diff / (2.0 * var[d]);
  }
  return acc;
}

// log sum_k exp(lw[k]) with max subtraction, plus normalized exp into resp.
inline double log_sum_exp_normalize(std::span<const double> lw, std::span<double> resp) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : lw) m = std::max(m, v);
  double s = 0.0;
  for (std::size_t k = 0; k < lw.size(); ++k) s += std::exp(lw[k] - m);
  const double lse = m + std::log(s);
  for (std::size_t k = 0; k < lw.size(); ++k) resp[k] = std::exp(lw[k] - lse);
  return lse;
}

inline void check_dims(const GmmModel& model, std::size_t cols, const char* where) {
  if (model.dim() != cols)
    throw DataError(std::string(where) + ": model dimension " + std::to_string(model.dim()) +
                    " does not match data dimension " + std::to_string(cols));
}

}  // namespace detail

inline double log_density(const GmmModel& model, std::span<const double> row) {
  detail::check_dims(model, row.size(), "log_density");
  std::vector<double> lw(model.components());
  for (std::size_t k = 0; k < model.components(); ++k)
    lw[k] = std::log(model.weights[k]) +
            detail::log_diag_gaussian(row, model.means[k], model.variances[k]);
  std::vector<double> scratch(model.components());
  return detail::log_sum_exp_normalize(lw, scratch);
}

// ---------------------------------------------------------------------------
// EM steps
// ---------------------------------------------------------------------------

inline EStepResult e_step(const GmmModel& model, const Matrix& data) {
  detail::check_dims(model, data.cols(), "e_step");
  const std::size_t n = data.rows();
  const std::size_t K = model.components();
  EStepResult out;
  out.responsibilities = Matrix(n, K);
  std::vector<double> lw(K);
  std::vector<double> log_w(K);
  for (std::size_t k = 0; k < K; ++k) log_w[k] = std::log(model.weights[k]);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    for (std::size_t k = 0; k < K; ++k)
      lw[k] = log_w[k] + detail::log_diag_gaussian(row, model.means[k], model.variances[k]);
    out.log_likelihood += detail::log_sum_exp_normalize(lw, out.responsibilities.row(i));
  }
  return out;
}

inline GmmModel m_step(const Matrix& data, const Matrix& responsibilities,
                       const GmmConfig& config) {
  if (responsibilities.rows() != data.rows())
    throw DataError("m_step: responsibility row count does not match data");
  const std::size_t n = data.rows();
  const std::size_t K = responsibilities.cols();
  const std::size_t dim = data.cols();

  GmmModel model;
  model.weights.resize(K);
  model.means.assign(K, std::vector<double>(dim, 0.0));
  model.variances.assign(K, std::vector<double>(dim, 0.0));

  std::vector<double> totals(K, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < K; ++k) totals[k] += responsibilities(i, k);
  for (std::size_t k = 0; k < K; ++k)
    if (totals[k] == 0.0)
      throw NumericError("m_step: component " + std::to_string(k) +
                         " received zero total responsibility (degenerate component)");

  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      const double r = responsibilities(i, k);
      for (std::size_t d = 0; d < dim; ++d) model.means[k][d] += r * row[d];
    }
  }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t d = 0; d < dim; ++d) model.means[k][d] /= totals[k];

  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      const double r = responsibilities(i, k);
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = row[d] - model.means[k][d];
        model.variances[k][d] += r * diff * diff;
      }
    }
  }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t d = 0; d < dim; ++d)
      model.variances[k][d] = std::max(model.variances[k][d] / totals[k], config.variance_floor);

  double weight_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) weight_sum += totals[k];
  for (std::size_t k = 0; k < K; ++k) model.weights[k] = totals[k] / weight_sum;
  return model;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

inline GmmModel init_params(const Matrix& data, const GmmConfig& config) {
  config.validate();
  const std::size_t n = data.rows();
  if (n < config.k)
    throw DataError("gmm: " + std::to_string(n) + " rows cannot seed " +
                    std::to_string(config.k) + " components");
  Rng rng(config.seed);

  if (config.init_method == GmmInit::RandomAssignment) {
    Matrix hard(n, config.k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      hard(i, static_cast<std::size_t>(rng.below(config.k))) = 1.0;
    return m_step(data, hard, config);
  }

  // Farthest point: seeded random first mean, then repeatedly the row with the
  // largest minimum squared distance to the means chosen so far.
  const std::size_t dim = data.cols();
  std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.below(n))};
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < config.k) {
    const auto last = data.row(chosen.back());
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      const auto row = data.row(i);
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = row[d] - last[d];
        d2 += diff * diff;
      }
      min_dist[i] = std::min(min_dist[i], d2);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (min_dist[i] > min_dist[best]) best = i;
    chosen.push_back(best);
  }

  GmmModel model;
  model.weights.assign(config.k, 1.0 / static_cast<double>(config.k));
  for (const std::size_t idx : chosen) {
    const auto row = data.row(idx);
    model.means.emplace_back(row.begin(), row.end());
  }
  // global per-column variance, floored
  std::vector<double> var(dim, 0.0);
  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    for (std::size_t d = 0; d < dim; ++d) mean[d] += row[d];
  }
  for (std::size_t d = 0; d < dim; ++d) mean[d] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = row[d] - mean[d];
      var[d] += diff * diff;
    }
  }
  for (std::size_t d = 0; d < dim; ++d)
    var[d] = std::max(var[d] / static_cast<double>(n), config.variance_floor);
  model.variances.assign(config.k, var);
  return model;
}

// ---------------------------------------------------------------------------
// Fit loop
// ---------------------------------------------------------------------------

/// Alternates E and M steps until the relative log-likelihood change drops
/// below epsilon or max_iterations is reached.
inline std::pair<GmmModel, FitTrace> fit_gmm(const Matrix& data, const GmmConfig& config) {
  config.validate();
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (double v : data.row(r))
      if (!std::isfinite(v)) throw DataError("gmm: data must be sanitized (finite) before fit");

  GmmModel model = init_params(data, config);
  EStepResult es = e_step(model, data);
  FitTrace trace;
  trace.log_likelihood.push_back(es.log_likelihood);
  if (!std::isfinite(es.log_likelihood))
    throw NumericError("gmm fit: non-finite log-likelihood at initialization");

  double prev = es.log_likelihood;
  for (std::size_t t = 1; t <= config.max_iterations; ++t) {
    model = m_step(data, es.responsibilities, config);
    es = e_step(model, data);
    trace.log_likelihood.push_back(es.log_likelihood);
    trace.iterations_run = t;
    if (!std::isfinite(es.log_likelihood))
      throw NumericError("gmm fit: non-finite log-likelihood at iteration " + std::to_string(t));
    const double rel = std::fabs(es.log_likelihood - prev) / std::max(std::fabs(prev), 1.0);
    if (rel < config.epsilon) {
      trace.converged = true;
      break;
    }
    prev = es.log_likelihood;
  }
  return {std::move(model), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

struct ClusterPrediction {
  std::size_t component = 0;           // argmax posterior, ties to lowest index
  std::vector<double> posterior;
};

inline ClusterPrediction predict_cluster(const GmmModel& model, std::span<const double> row) {
  detail::check_dims(model, row.size(), "predict_cluster");
  const std::size_t K = model.components();
  std::vector<double> lw(K);
  for (std::size_t k = 0; k < K; ++k)
    lw[k] = std::log(model.weights[k]) +
            detail::log_diag_gaussian(row, model.means[k], model.variances[k]);
  ClusterPrediction pred;
  pred.posterior.resize(K);
  detail::log_sum_exp_normalize(lw, pred.posterior);
  for (std::size_t k = 1; k < K; ++k)
    if (pred.posterior[k] > pred.posterior[pred.component]) pred.component = k;
  return pred;
}

// ---------------------------------------------------------------------------
// Serialization (value-exact round trip)
// ---------------------------------------------------------------------------

namespace detail {

inline void write_vector(std::ostream& out, const char* tag, const std::vector<double>& v) {
  out << tag;
  for (double x : v) out << ' ' << fmt_full(x);
  out << '\n';
}

inline std::vector<double> parse_tagged_vector(const std::string& line, const std::string& tag,
                                               std::size_t expected, const std::string& what) {
  std::istringstream ss(line);
  std::string head;
  ss >> head;
  if (head != tag) throw DataError(what + ": expected '" + tag + "' line, got '" + head + "'");
  std::vector<double> v;
  double x;
  while (ss >> x) v.push_back(x);
  if (v.size() != expected)
    throw DataError(what + ": '" + tag + "' line has " + std::to_string(v.size()) +
                    " values, expected " + std::to_string(expected));
  return v;
}

}  // namespace detail

inline void write_gmm(std::ostream& out, const GmmModel& model) {
  out << "ppid-gmm 1\n";
  out << "components " << model.components() << "\n";
  out << "dim " << model.dim() << "\n";
  for (std::size_t k = 0; k < model.components(); ++k) {
    out << "weight " << fmt_full(model.weights[k]) << "\n";
    detail::write_vector(out, "mean", model.means[k]);
    detail::write_vector(out, "variance", model.variances[k]);
  }
}

inline GmmModel read_gmm(std::istream& in) {
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) throw DataError(std::string("gmm model: truncated before ") + what);
    return line;
  };
  if (next_line("header") != "ppid-gmm 1")
    throw DataError("gmm model: unrecognized header '" + line + "'");
  std::size_t K = 0, dim = 0;
  {
    std::istringstream ss(next_line("components"));
    std::string tag;
    if (!(ss >> tag >> K) || tag != "components" || K == 0)
      throw DataError("gmm model: bad components line");
  }
  {
    std::istringstream ss(next_line("dim"));
    std::string tag;
    if (!(ss >> tag >> dim) || tag != "dim" || dim == 0)
      throw DataError("gmm model: bad dim line");
  }
  GmmModel model;
  for (std::size_t k = 0; k < K; ++k) {
    {
      std::istringstream ss(next_line("weight"));
      std::string tag;
      double w;
      if (!(ss >> tag >> w) || tag != "weight")
        throw DataError("gmm model: bad weight line for component " + std::to_string(k));
      model.weights.push_back(w);
    }
    model.means.push_back(
        detail::parse_tagged_vector(next_line("mean"), "mean", dim, "gmm model"));
    model.variances.push_back(
        detail::parse_tagged_vector(next_line("variance"), "variance", dim, "gmm model"));
  }
  return model;
}

inline void save_gmm(const GmmModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write gmm model file '" + path + "'");
  write_gmm(out, model);
}

inline GmmModel load_gmm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open gmm model file '" + path + "'");
  return read_gmm(in);
}

}  // namespace ppid
