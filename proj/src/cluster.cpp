#include "cluster.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "parallel.h"

namespace tkgr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_finite(const Eigen::MatrixXd& X, const std::string& what) {
  if (!X.allFinite()) throw std::invalid_argument(what + " contains non-finite values");
}

}  // namespace

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embedding file: " + path);
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  size_t dims = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected entity<TAB>v1,v2,...");
    }
    std::string name = line.substr(0, tab);
    if (!seen.insert(name).second) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate entity '" + name + "'");
    }
    std::vector<double> values;
    size_t start = tab + 1;
    while (start <= line.size()) {
      size_t comma = line.find(',', start);
      std::string tok = comma == std::string::npos ? line.substr(start) : line.substr(start, comma - start);
      double v = 0.0;
      try {
        size_t used = 0;
        v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad embedding value '" + tok + "'");
      }
      if (!std::isfinite(v)) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-finite embedding value");
      }
      values.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (values.empty()) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty embedding");
    if (dims == 0) dims = values.size();
    if (values.size() != dims) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": embedding has " +
                               std::to_string(values.size()) + " dims, expected " + std::to_string(dims));
    }
    names.push_back(std::move(name));
    rows.push_back(std::move(values));
  }
  if (rows.size() < 2) throw std::runtime_error("embedding file needs at least 2 entities: " + path);
  EmbeddingMatrix out;
  out.names = std::move(names);
  out.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dims));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < dims; ++j) out.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return out;
}

Eigen::MatrixXd PcaProjection::transform(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw std::invalid_argument("pca transform: dimension mismatch");
  return (X.rowwise() - mean.transpose()) * basis.transpose();
}

Eigen::MatrixXd PcaProjection::inverse_transform(const Eigen::MatrixXd& Y) const {
  return (Y * basis).rowwise() + mean.transpose();
}

PcaProjection pca_fit(const Eigen::MatrixXd& X, int32_t dims) {
  const Eigen::Index n = X.rows(), d = X.cols();
  check_finite(X, "pca input");
  if (n < 2) throw std::invalid_argument("pca needs at least 2 rows");
  if (dims < 1 || dims > std::min<Eigen::Index>(n - 1, d)) {
    throw std::invalid_argument("pca dims must lie in [1, min(N-1, d)]");
  }
  PcaProjection proj;
  proj.mean = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - proj.mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca eigendecomposition failed");
  Eigen::VectorXd evals = solver.eigenvalues();  // ascending
  double total = std::max(evals.sum(), 0.0);
  if (total <= 1e-12) throw std::invalid_argument("pca input has zero variance");

  proj.basis.resize(dims, d);
  proj.explained_variance.resize(dims);
  proj.explained_ratio.resize(dims);
  for (int32_t i = 0; i < dims; ++i) {
    Eigen::Index src = d - 1 - i;
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index argmax = 0;
    v.cwiseAbs().maxCoeff(&argmax);
    if (v(argmax) < 0) v = -v;
    proj.basis.row(i) = v.transpose();
    double ev = std::max(evals(src), 0.0);
    proj.explained_variance(i) = ev;
    proj.explained_ratio(i) = ev / total;
  }
  return proj;
}

namespace {

// k-means++ seeding: first center uniform, then distance-squared weighted.
Eigen::MatrixXd kmeanspp_seeds(const Eigen::MatrixXd& X, int32_t k, Rng& rng) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd centers(k, X.cols());
  centers.row(0) = X.row(static_cast<Eigen::Index>(rng.bounded(static_cast<size_t>(n))));
  Eigen::VectorXd dist2 = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int32_t c = 1; c < k; ++c) {
    double total = dist2.sum();
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.bounded(static_cast<size_t>(n)));
    } else {
      double u = rng.next_double() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2(i);
        if (u < acc) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = X.row(pick);
    dist2 = dist2.cwiseMin((X.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

// Per-row log densities (N x k) for the current parameters.
Eigen::MatrixXd component_log_densities(const GmmModel& m, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const int32_t k = m.components();
  Eigen::MatrixXd logp(n, k);
  if (m.covariance_type == Covariance::diagonal) {
    for (int32_t j = 0; j < k; ++j) {
      Eigen::ArrayXd var = m.diag_vars.row(j).transpose().array();
      double log_det = var.log().sum();
      Eigen::MatrixXd diff = X.rowwise() - m.means.row(j);
      Eigen::VectorXd maha = (diff.array().square().rowwise() / var.transpose()).rowwise().sum();
      logp.col(j) = -0.5 * (maha.array() + log_det + static_cast<double>(X.cols()) * kLog2Pi);
    }
  } else {
    for (int32_t j = 0; j < k; ++j) {
      Eigen::LLT<Eigen::MatrixXd> llt(m.full_covs[static_cast<size_t>(j)]);
      if (llt.info() != Eigen::Success) throw std::runtime_error("gmm covariance not positive definite");
      double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      Eigen::MatrixXd diff = X.rowwise() - m.means.row(j);
      Eigen::MatrixXd solved = llt.matrixL().solve(diff.transpose());
      Eigen::VectorXd maha = solved.colwise().squaredNorm();
      logp.col(j) = -0.5 * (maha.array() + log_det + static_cast<double>(X.cols()) * kLog2Pi);
    }
  }
  return logp;
}

// Row-wise logsumexp of log(w_j) + logp_ij.
Eigen::VectorXd row_logsumexp(const Eigen::MatrixXd& weighted) {
  Eigen::VectorXd m = weighted.rowwise().maxCoeff();
  return m.array() + (weighted.colwise() - m).array().exp().rowwise().sum().log();
}

Eigen::MatrixXd weighted_log_densities(const GmmModel& model, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd logp = component_log_densities(model, X);
  Eigen::RowVectorXd logw = model.weights.array().log().matrix().transpose();
  return logp.rowwise() + logw;
}

}  // namespace

int64_t GmmModel::param_count() const {
  const int64_t k = components();
  const int64_t d = dims;
  int64_t cov = covariance_type == Covariance::diagonal ? k * d : k * d * (d + 1) / 2;
  return (k - 1) + k * d + cov;
}

Eigen::MatrixXd GmmModel::responsibilities(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd weighted = weighted_log_densities(*this, X);
  Eigen::VectorXd lse = row_logsumexp(weighted);
  return (weighted.colwise() - lse).array().exp();
}

double GmmModel::total_log_likelihood(const Eigen::MatrixXd& X) const {
  return row_logsumexp(weighted_log_densities(*this, X)).sum();
}

GmmModel gmm_fit(const Eigen::MatrixXd& X, int32_t k, Rng& rng, const GmmOptions& opts) {
  const Eigen::Index n = X.rows(), d = X.cols();
  check_finite(X, "gmm input");
  if (k < 1) throw std::invalid_argument("gmm needs k >= 1");
  if (n < k) throw std::invalid_argument("gmm needs at least k rows");

  GmmModel m;
  m.covariance_type = opts.covariance;
  m.dims = static_cast<int32_t>(d);
  m.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  m.means = kmeanspp_seeds(X, k, rng);
  Eigen::RowVectorXd global_mean = X.colwise().mean();
  Eigen::RowVectorXd global_var =
      ((X.rowwise() - global_mean).array().square().colwise().sum() / static_cast<double>(n))
          .cwiseMax(opts.covariance_floor);
  if (opts.covariance == Covariance::diagonal) {
    m.diag_vars = global_var.replicate(k, 1);
  } else {
    Eigen::MatrixXd centered = X.rowwise() - global_mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(opts.covariance_floor);
    Eigen::MatrixXd floored = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    m.full_covs.assign(static_cast<size_t>(k), floored);
  }

  double prev_ll = -std::numeric_limits<double>::infinity();
  int32_t reseeds = 0;
  bool just_reseeded = false;
  for (int32_t iter = 0; iter < opts.max_iters; ++iter) {
    Eigen::MatrixXd weighted = weighted_log_densities(m, X);
    Eigen::VectorXd lse = row_logsumexp(weighted);
    double ll = lse.sum();
    if (!just_reseeded && ll + 1e-9 < prev_ll) {
      throw std::logic_error("gmm EM log-likelihood decreased");
    }
    just_reseeded = false;
    if (std::abs(ll - prev_ll) < opts.tol) {
      m.log_likelihood = ll;
      return m;
    }
    prev_ll = ll;
    m.log_likelihood = ll;

    Eigen::MatrixXd resp = (weighted.colwise() - lse).array().exp();
    Eigen::VectorXd nj = resp.colwise().sum();

    int32_t collapsed = -1;
    for (int32_t j = 0; j < k; ++j) {
      if (nj(j) < 1e-10) {
        collapsed = j;
        break;
      }
    }
    if (collapsed >= 0) {
      if (++reseeds > 3) throw std::runtime_error("gmm degenerate: component collapsed more than 3 times");
      // Re-seed the empty component at the worst-explained point.
      Eigen::Index worst;
      lse.minCoeff(&worst);
      m.means.row(collapsed) = X.row(worst);
      if (opts.covariance == Covariance::diagonal) {
        m.diag_vars.row(collapsed) = global_var;
      } else {
        m.full_covs[static_cast<size_t>(collapsed)] = Eigen::MatrixXd(m.full_covs[0].rows(), m.full_covs[0].cols());
        Eigen::MatrixXd centered = X.rowwise() - global_mean;
        m.full_covs[static_cast<size_t>(collapsed)] =
            centered.transpose() * centered / static_cast<double>(n) +
            opts.covariance_floor * Eigen::MatrixXd::Identity(d, d);
      }
      m.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
      prev_ll = -std::numeric_limits<double>::infinity();
      just_reseeded = true;
      continue;
    }

    m.weights = nj / static_cast<double>(n);
    for (int32_t j = 0; j < k; ++j) {
      Eigen::RowVectorXd mu = (resp.col(j).transpose() * X) / nj(j);
      m.means.row(j) = mu;
      Eigen::MatrixXd diff = X.rowwise() - mu;
      if (opts.covariance == Covariance::diagonal) {
        Eigen::RowVectorXd var =
            (diff.array().square().colwise() * resp.col(j).array()).colwise().sum() / nj(j);
        m.diag_vars.row(j) = var.cwiseMax(opts.covariance_floor);
      } else {
        Eigen::MatrixXd cov = diff.transpose() * resp.col(j).asDiagonal() * diff / nj(j);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(opts.covariance_floor);
        m.full_covs[static_cast<size_t>(j)] = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
      }
    }
  }
  m.log_likelihood = m.total_log_likelihood(X);
  return m;
}

double bic_value(int64_t param_count, int64_t n, double log_likelihood) {
  return static_cast<double>(param_count) * std::log(static_cast<double>(n)) - 2.0 * log_likelihood;
}

double aic_value(int64_t param_count, double log_likelihood) {
  return 2.0 * static_cast<double>(param_count) - 2.0 * log_likelihood;
}

double bic(const GmmModel& model, const Eigen::MatrixXd& X) {
  return bic_value(model.param_count(), X.rows(), model.total_log_likelihood(X));
}

double aic(const GmmModel& model, const Eigen::MatrixXd& X) {
  return aic_value(model.param_count(), model.total_log_likelihood(X));
}

KmeansResult kmeans(const Eigen::MatrixXd& X, int32_t k, Rng& rng, int32_t max_iters) {
  const Eigen::Index n = X.rows();
  if (k < 1) throw std::invalid_argument("kmeans needs k >= 1");
  if (n < k) throw std::invalid_argument("kmeans needs at least k rows");
  KmeansResult res;
  res.centers = kmeanspp_seeds(X, k, rng);
  res.labels.assign(static_cast<size_t>(n), 0);

  auto assign = [&]() {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int32_t best = 0;
      double best_d = (X.row(i) - res.centers.row(0)).squaredNorm();
      for (int32_t c = 1; c < k; ++c) {
        double d2 = (X.row(i) - res.centers.row(c)).squaredNorm();
        if (d2 < best_d) {
          best_d = d2;
          best = c;
        }
      }
      if (res.labels[static_cast<size_t>(i)] != best) {
        res.labels[static_cast<size_t>(i)] = best;
        changed = true;
      }
    }
    return changed;
  };

  assign();
  for (int32_t iter = 0; iter < max_iters; ++iter) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(res.labels[static_cast<size_t>(i)]) += X.row(i);
      counts(res.labels[static_cast<size_t>(i)]) += 1.0;
    }
    for (int32_t c = 0; c < k; ++c) {
      if (counts(c) > 0) {
        res.centers.row(c) = sums.row(c) / counts(c);
      } else {
        // Re-seed an empty cluster at the point farthest from its center.
        Eigen::Index worst = 0;
        double worst_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double d2 = (X.row(i) - res.centers.row(res.labels[static_cast<size_t>(i)])).squaredNorm();
          if (d2 > worst_d) {
            worst_d = d2;
            worst = i;
          }
        }
        res.centers.row(c) = X.row(worst);
      }
    }
    if (!assign()) break;
  }
  res.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    res.inertia += (X.row(i) - res.centers.row(res.labels[static_cast<size_t>(i)])).squaredNorm();
  }
  return res;
}

double co_assignment_agreement(const std::vector<int32_t>& a, const std::vector<int32_t>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("labelings differ in size");
  const size_t n = a.size();
  if (n < 2) return 1.0;
  int64_t agree = 0, total = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      ++total;
      if ((a[i] == a[j]) == (b[i] == b[j])) ++agree;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

ModelSelection select_model(const Eigen::MatrixXd& X, const std::vector<int32_t>& dims_grid,
                            const std::vector<int32_t>& k_grid, uint64_t seed, const GmmOptions& opts,
                            int32_t restarts, int workers, std::optional<std::pair<int32_t, int32_t>> force) {
  if (dims_grid.empty() || k_grid.empty()) throw std::invalid_argument("select_model: empty grid");
  if (restarts < 1) throw std::invalid_argument("select_model: restarts must be >= 1");

  std::vector<std::pair<int32_t, int32_t>> cells;
  for (int32_t d : dims_grid) {
    for (int32_t k : k_grid) cells.emplace_back(d, k);
  }
  if (force && std::find(cells.begin(), cells.end(), *force) == cells.end()) cells.push_back(*force);

  // PCA projections are shared across cells with the same dims.
  std::map<int32_t, PcaProjection> projections;
  std::map<int32_t, Eigen::MatrixXd> reduced;
  for (const auto& [d, k] : cells) {
    if (!projections.count(d)) {
      projections.emplace(d, pca_fit(X, d));
      reduced.emplace(d, projections.at(d).transform(X));
    }
  }

  struct CellFit {
    CellScore score;
    GmmModel model;
    bool has_model = false;
  };
  std::vector<CellFit> fits(cells.size());
  parallel_for(cells.size(), workers, [&](size_t i) {
    auto [d, k] = cells[i];
    CellFit& fit = fits[i];
    fit.score.dims = d;
    fit.score.k = k;
    const Eigen::MatrixXd& Xd = reduced.at(d);
    double best_ll = -std::numeric_limits<double>::infinity();
    std::string last_error;
    for (int32_t r = 0; r < restarts; ++r) {
      Rng rng(hash_mix(hash_mix(hash_mix(seed, static_cast<uint64_t>(d)), static_cast<uint64_t>(k)),
                       static_cast<uint64_t>(r)));
      try {
        GmmModel model = gmm_fit(Xd, k, rng, opts);
        if (model.log_likelihood > best_ll) {
          best_ll = model.log_likelihood;
          fit.model = std::move(model);
          fit.has_model = true;
        }
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }
    if (!fit.has_model) {
      fit.score.failed = true;
      fit.score.error = last_error;
      return;
    }
    fit.score.log_likelihood = fit.model.log_likelihood;
    fit.score.bic = bic_value(fit.model.param_count(), Xd.rows(), fit.model.log_likelihood);
    fit.score.aic = aic_value(fit.model.param_count(), fit.model.log_likelihood);
  });

  ModelSelection sel;
  sel.table.reserve(fits.size());
  for (const CellFit& fit : fits) sel.table.push_back(fit.score);

  size_t chosen = fits.size();
  if (force) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (cells[i] == *force) {
        chosen = i;
        break;
      }
    }
    if (chosen == fits.size() || fits[chosen].score.failed) {
      throw std::runtime_error("select_model: forced (dims, k) cell failed to fit");
    }
  } else {
    double best_bic = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < fits.size(); ++i) {
      const CellScore& s = fits[i].score;
      if (s.failed) continue;
      bool better = s.bic < best_bic ||
                    (s.bic == best_bic && chosen < fits.size() &&
                     (s.k < fits[chosen].score.k ||
                      (s.k == fits[chosen].score.k && s.dims < fits[chosen].score.dims)));
      if (better) {
        best_bic = s.bic;
        chosen = i;
      }
    }
    if (chosen == fits.size()) throw std::runtime_error("select_model: every grid cell failed to fit");
  }

  sel.dims = cells[chosen].first;
  sel.k = cells[chosen].second;
  sel.projection = projections.at(sel.dims);
  sel.model = fits[chosen].model;
  return sel;
}

std::vector<int32_t> assign_categories(const GmmModel& model, const PcaProjection& projection,
                                       const EmbeddingMatrix& embeddings) {
  if (embeddings.data.cols() != projection.mean.size()) {
    throw std::invalid_argument("assign_categories: embedding dimension does not match the projection");
  }
  Eigen::MatrixXd reduced = projection.transform(embeddings.data);
  if (reduced.cols() != model.dims) {
    throw std::invalid_argument("assign_categories: projection dims do not match the model");
  }
  Eigen::MatrixXd resp = model.responsibilities(reduced);
  std::vector<int32_t> labels(static_cast<size_t>(reduced.rows()));
  for (Eigen::Index i = 0; i < reduced.rows(); ++i) {
    int32_t best = 0;
    double best_r = resp(i, 0);
    for (int32_t j = 1; j < model.components(); ++j) {
      if (resp(i, j) > best_r) {
        best_r = resp(i, j);
        best = j;
      }
    }
    labels[static_cast<size_t>(i)] = best;
  }
  return labels;
}

void write_category_map(const std::string& path, const std::vector<std::string>& names,
                        const std::vector<int32_t>& labels) {
  if (names.size() != labels.size()) throw std::invalid_argument("write_category_map: size mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write category map: " + path);
  for (size_t i = 0; i < names.size(); ++i) {
    out << names[i] << "\tc_" << labels[i] << '\n';
  }
}

}  // namespace tkgr
