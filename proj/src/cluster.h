#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rng.h"
#include "types.h"

namespace tkgr {

// Entity-name embeddings: one row per entity, loaded from
// `entity<TAB>v1,v2,...,vd` lines.
struct EmbeddingMatrix {
  Eigen::MatrixXd data;  // N x d
  std::vector<std::string> names;
};

EmbeddingMatrix load_embeddings(const std::string& path);

struct PcaProjection {
  Eigen::VectorXd mean;                 // d
  Eigen::MatrixXd basis;                // dims x d, orthonormal rows
  Eigen::VectorXd explained_variance;   // dims
  Eigen::VectorXd explained_ratio;      // dims, fractions of total variance

  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& Y) const;
};

// Top principal directions of X by descending explained variance. Sign
// convention: the largest-magnitude coordinate of each direction is
// positive. Requires 1 <= dims <= min(N-1, d) and non-degenerate data.
PcaProjection pca_fit(const Eigen::MatrixXd& X, int32_t dims);

enum class Covariance { diagonal, full };

struct GmmOptions {
  int32_t max_iters = 200;
  double tol = 1e-6;
  Covariance covariance = Covariance::diagonal;
  double covariance_floor = 1e-6;
};

struct GmmModel {
  Covariance covariance_type = Covariance::diagonal;
  Eigen::VectorXd weights;                    // k
  Eigen::MatrixXd means;                      // k x d
  Eigen::MatrixXd diag_vars;                  // k x d when diagonal
  std::vector<Eigen::MatrixXd> full_covs;     // k matrices when full
  double log_likelihood = 0.0;                // of the training data
  int32_t dims = 0;
  int32_t components() const { return static_cast<int32_t>(weights.size()); }
  int64_t param_count() const;

  // Row-wise posterior responsibilities; rows sum to 1.
  Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& X) const;
  double total_log_likelihood(const Eigen::MatrixXd& X) const;
};

// EM fit from k-means++-seeded means. The log-likelihood is checked
// non-decreasing on every iteration (1e-9 slack); empty components are
// re-seeded from the worst-explained points, and more than 3 re-seeds
// raise a degeneracy error.
GmmModel gmm_fit(const Eigen::MatrixXd& X, int32_t k, Rng& rng, const GmmOptions& opts = {});

double bic_value(int64_t param_count, int64_t n, double log_likelihood);
double aic_value(int64_t param_count, double log_likelihood);
double bic(const GmmModel& model, const Eigen::MatrixXd& X);
double aic(const GmmModel& model, const Eigen::MatrixXd& X);

struct KmeansResult {
  std::vector<int32_t> labels;
  Eigen::MatrixXd centers;  // k x d
  double inertia = 0.0;
};

KmeansResult kmeans(const Eigen::MatrixXd& X, int32_t k, Rng& rng, int32_t max_iters = 300);

// Fraction of point pairs on which two labelings agree about
// co-assignment (same cluster vs. different clusters). O(N^2) pairs.
double co_assignment_agreement(const std::vector<int32_t>& a, const std::vector<int32_t>& b);

struct CellScore {
  int32_t dims = 0;
  int32_t k = 0;
  double bic = 0.0;
  double aic = 0.0;
  double log_likelihood = 0.0;
  bool failed = false;
  std::string error;
};

struct ModelSelection {
  int32_t dims = 0;
  int32_t k = 0;
  PcaProjection projection;
  GmmModel model;
  std::vector<CellScore> table;
};

// Fits a GMM per (PCA dims, k) grid cell with `restarts` EM restarts
// (best log-likelihood kept) and returns the BIC-minimizing cell plus the
// full score table. Degenerate cells are recorded and skipped. `force`
// overrides the selection with a user-chosen (dims, k) pair, fitting it
// if it lies outside the grid.
ModelSelection select_model(const Eigen::MatrixXd& X, const std::vector<int32_t>& dims_grid,
                            const std::vector<int32_t>& k_grid, uint64_t seed, const GmmOptions& opts = {},
                            int32_t restarts = 5, int workers = 1,
                            std::optional<std::pair<int32_t, int32_t>> force = std::nullopt);

// Argmax-responsibility component per embedding row (lowest index wins
// ties).
std::vector<int32_t> assign_categories(const GmmModel& model, const PcaProjection& projection,
                                       const EmbeddingMatrix& embeddings);

// Writes the entity-category TSV (`entity<TAB>c_<index>`) consumed by the
// dataset loader.
void write_category_map(const std::string& path, const std::vector<std::string>& names,
                        const std::vector<int32_t>& labels);

}  // namespace tkgr
