#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "citesim/table.hpp"

namespace citesim {

struct NonPositiveLog : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyFactorLevel : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RankDeficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownFactor : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingleGroup : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DepTransform { Identity, Abs, NormCd };
enum class TermTransform { Log, LogSquared, Identity };
enum class InteractWith { None, Year };
enum class FeGroup { None, Year, Journal };
enum class SeType { Classical, ClusterByGroup };

struct Term {
  std::string variable;
  TermTransform transform = TermTransform::Identity;
  InteractWith interaction = InteractWith::None;
};

struct FactorSpec {
  std::string variable;
  std::int64_t baseline = 0;
};

// Declarative model description: transformed dependent, ordered terms,
// categorical expansions with declared baselines, and the absorbed group.
struct RegressionSpec {
  std::string dependent = "CD";
  DepTransform dep_transform = DepTransform::Identity;
  std::vector<Term> terms;
  std::vector<FactorSpec> factors;
  FeGroup fixed_effects = FeGroup::None;
  SeType se_type = SeType::Classical;

  static RegressionSpec from_json_text(const std::string& text);
  static RegressionSpec from_file(const std::filesystem::path& path);
  std::string to_json_text() const;
};

// Dense row-major matrix; keeps the public surface free of linear-algebra
// library types.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct FactorLayout {
  std::string variable;
  std::int64_t baseline = 0;
  std::vector<std::int64_t> levels;        // non-baseline, ascending
  std::vector<std::size_t> column_index;   // into the design matrix
};

struct Design {
  std::vector<double> y;
  Matrix x;
  std::vector<std::string> column_names;
  std::vector<std::int32_t> group;  // per-row absorbed-group index; empty when none
  std::int32_t n_groups = 0;
  std::vector<FactorLayout> factors;
  std::int32_t interaction_base_year = 0;  // year re-centering used for x-by-year terms
};

// Builds y and X in declared column order: terms, then factor dummies with
// the baseline level dropped, then a constant column when no group is
// absorbed. Throws NonPositiveLog and EmptyFactorLevel.
Design build_design(const DataTable& table, const RegressionSpec& spec);

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;  // estimate -/+ 1.96 se
  double ci_hi = 0.0;
  double p_value = 1.0;
};

struct FitResult {
  std::vector<Coefficient> coefficients;
  std::int64_t n_obs = 0;
  std::int32_t n_groups = 0;  // absorbed groups (0 when none)
  double r2_within = 0.0;
  double adj_r2 = 0.0;
  double residual_variance = 0.0;
  // xtreg-style constant: grand mean of y minus fitted mean (FE runs only).
  double intercept = 0.0;
  std::string se_type = "classical";
  std::string fe_group = "none";
  std::vector<FactorLayout> factors;
  std::int32_t interaction_base_year = 0;

  const Coefficient* find(const std::string& name) const;

  std::string to_json_text() const;
  void write_json(const std::filesystem::path& path) const;
};

// Within estimator: group-demeans y and X, solves least squares by
// column-pivoted QR, and reports classical standard errors with a
// degrees-of-freedom correction for the absorbed groups (dof = N - k - G).
// Cluster-robust (CR1) errors by the absorbed group are optional.
// Throws RankDeficient naming the collinear columns.
FitResult fit(const Design& design, const RegressionSpec& spec);

FitResult fit_table(const DataTable& table, const RegressionSpec& spec);

struct LevelEffect {
  std::int64_t level = 0;
  double estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double p_value = 1.0;
  bool significant = false;  // p < 0.05 vs baseline
  bool is_baseline = false;
};

// Per-level estimates for one factor; the baseline is reported as 0 with no
// interval. Throws UnknownFactor.
std::vector<LevelEffect> marginal_effects(const FitResult& fit, const std::string& factor);

struct GroupGapDecomposition {
  double raw_gap = 0.0;           // mean(dep | group 1) - mean(dep | group 0)
  double raw_gap_se = 0.0;
  double delta_indicator = 0.0;   // indicator coefficient, covariate substituted out
  double covariate_explained = 0.0;  // b_cov * (mean cov | 1 - mean cov | 0)
  std::optional<double> fraction_explained;  // absent when raw gap is within noise
  double mean_covariate_group0 = 0.0;
  double mean_covariate_group1 = 0.0;
  std::int64_t n_group0 = 0;
  std::int64_t n_group1 = 0;
  FitResult fit_without_indicator;
  FitResult fit_with_indicator;

  std::string to_json_text() const;
};

// Quasi-experimental split on a two-valued group column. Fits (A) full_spec
// as given and (B) full_spec with the indicator substituting for the
// covariate term named by `covariate`; attributes the raw gap in the
// dependent to the groups' covariate difference. Throws SingleGroup.
GroupGapDecomposition decompose_group_gap(const DataTable& table, const RegressionSpec& full_spec,
                                          const std::string& group_column,
                                          const std::string& covariate);

}  // namespace citesim
