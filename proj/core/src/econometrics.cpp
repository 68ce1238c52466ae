#include "citesim/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace citesim {

namespace {

double two_sided_p(double z) {
  // normal approximation
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

constexpr double kCi95 = 1.959963984540054;

std::string transform_name(const Term& term) {
  std::string base;
  switch (term.transform) {
    case TermTransform::Log: base = "log(" + term.variable + ")"; break;
    case TermTransform::LogSquared: base = "log2(" + term.variable + ")"; break;
    case TermTransform::Identity: base = term.variable; break;
  }
  if (term.interaction == InteractWith::Year) base += ":t";
  return base;
}

const char* fe_name(FeGroup g) {
  switch (g) {
    case FeGroup::None: return "none";
    case FeGroup::Year: return "year";
    case FeGroup::Journal: return "journal";
  }
  return "none";
}

std::int64_t round_level(double v) { return static_cast<std::int64_t>(std::llround(v)); }

}  // namespace

RegressionSpec RegressionSpec::from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  RegressionSpec spec;
  spec.terms.clear();

  if (j.contains("dependent")) {
    const auto& dep = j["dependent"];
    spec.dependent = dep.at("variable").get<std::string>();
    const auto tr = dep.value("transform", std::string("identity"));
    if (tr == "identity") {
      spec.dep_transform = DepTransform::Identity;
    } else if (tr == "abs") {
      spec.dep_transform = DepTransform::Abs;
    } else if (tr == "normcd") {
      spec.dep_transform = DepTransform::NormCd;
    } else {
      throw std::invalid_argument("unknown dependent transform: " + tr);
    }
  }
  for (const auto& t : j.value("terms", nlohmann::json::array())) {
    Term term;
    term.variable = t.at("variable").get<std::string>();
    const auto tr = t.value("transform", std::string("identity"));
    if (tr == "log") {
      term.transform = TermTransform::Log;
    } else if (tr == "log2") {
      term.transform = TermTransform::LogSquared;
    } else if (tr == "identity") {
      term.transform = TermTransform::Identity;
    } else {
      throw std::invalid_argument("unknown term transform: " + tr);
    }
    const auto inter = t.value("interaction", std::string("none"));
    if (inter == "none") {
      term.interaction = InteractWith::None;
    } else if (inter == "year") {
      term.interaction = InteractWith::Year;
    } else {
      throw std::invalid_argument("unknown interaction: " + inter);
    }
    spec.terms.push_back(term);
  }
  for (const auto& f : j.value("factors", nlohmann::json::array())) {
    FactorSpec factor;
    factor.variable = f.at("variable").get<std::string>();
    factor.baseline = f.at("baseline").get<std::int64_t>();
    spec.factors.push_back(factor);
  }
  const auto fe = j.value("fixed_effects_group", std::string("none"));
  if (fe == "none") {
    spec.fixed_effects = FeGroup::None;
  } else if (fe == "year") {
    spec.fixed_effects = FeGroup::Year;
  } else if (fe == "journal") {
    spec.fixed_effects = FeGroup::Journal;
  } else {
    throw std::invalid_argument("unknown fixed_effects_group: " + fe);
  }
  const auto se = j.value("se_type", std::string("classical"));
  if (se == "classical") {
    spec.se_type = SeType::Classical;
  } else if (se == "cluster-by-group") {
    spec.se_type = SeType::ClusterByGroup;
  } else {
    throw std::invalid_argument("unknown se_type: " + se);
  }
  return spec;
}

RegressionSpec RegressionSpec::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::string RegressionSpec::to_json_text() const {
  nlohmann::json j;
  j["dependent"]["variable"] = dependent;
  j["dependent"]["transform"] = dep_transform == DepTransform::Identity ? "identity"
                                : dep_transform == DepTransform::Abs    ? "abs"
                                                                        : "normcd";
  j["terms"] = nlohmann::json::array();
  for (const Term& t : terms) {
    nlohmann::json jt;
    jt["variable"] = t.variable;
    jt["transform"] = t.transform == TermTransform::Log          ? "log"
                      : t.transform == TermTransform::LogSquared ? "log2"
                                                                 : "identity";
    jt["interaction"] = t.interaction == InteractWith::Year ? "year" : "none";
    j["terms"].push_back(jt);
  }
  j["factors"] = nlohmann::json::array();
  for (const FactorSpec& f : factors) {
    j["factors"].push_back({{"variable", f.variable}, {"baseline", f.baseline}});
  }
  j["fixed_effects_group"] = fe_name(fixed_effects);
  j["se_type"] = se_type == SeType::Classical ? "classical" : "cluster-by-group";
  return j.dump(2);
}

Design build_design(const DataTable& table, const RegressionSpec& spec) {
  const std::size_t n = table.num_rows();
  if (n == 0) throw std::invalid_argument("empty table");

  Design design;

  // Dependent
  const std::string dep_column = spec.dep_transform == DepTransform::NormCd
                                     ? std::string("normcd")
                                     : spec.dependent;
  const auto dep = table.column(dep_column);
  design.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = dep[i];
    if (std::isnan(v)) {
      throw std::invalid_argument("dependent '" + dep_column + "' missing at row " +
                                  std::to_string(i));
    }
    if (spec.dep_transform == DepTransform::Abs) v = std::abs(v);
    design.y[i] = v;
  }

  // The dependent must not re-enter on the right-hand side.
  for (const Term& term : spec.terms) {
    if (term.variable == dep_column) {
      throw std::invalid_argument("dependent variable appears among regressors");
    }
  }

  std::span<const double> years;
  double year_base = 0.0;
  const bool needs_year =
      spec.fixed_effects == FeGroup::Year ||
      std::any_of(spec.terms.begin(), spec.terms.end(),
                  [](const Term& t) { return t.interaction == InteractWith::Year; }) ||
      std::any_of(spec.factors.begin(), spec.factors.end(),
                  [](const FactorSpec& f) { return f.variable == "year"; });
  if (needs_year) {
    years = table.column("year");
    year_base = *std::min_element(years.begin(), years.end());
    design.interaction_base_year = static_cast<std::int32_t>(year_base);
  }

  // Term columns in declared order.
  std::vector<std::vector<double>> columns;
  for (const Term& term : spec.terms) {
    const auto src = table.column(term.variable);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = src[i];
      if (std::isnan(v)) {
        throw std::invalid_argument("variable '" + term.variable + "' missing at row " +
                                    std::to_string(i));
      }
      if (term.transform != TermTransform::Identity) {
        if (v <= 0.0) {
          throw NonPositiveLog("variable '" + term.variable + "' is " + std::to_string(v) +
                               " at row " + std::to_string(i) + ", log requires > 0");
        }
        const double lv = std::log(v);
        v = term.transform == TermTransform::Log ? lv : lv * lv;
      }
      if (term.interaction == InteractWith::Year) v *= (years[i] - year_base);
      col[i] = v;
    }
    columns.push_back(std::move(col));
    design.column_names.push_back(transform_name(term));
  }

  // Factor dummies, baseline dropped, levels ascending.
  for (const FactorSpec& factor : spec.factors) {
    const auto src = table.column(factor.variable);
    std::set<std::int64_t> levels;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(src[i])) {
        throw std::invalid_argument("factor '" + factor.variable + "' missing at row " +
                                    std::to_string(i));
      }
      levels.insert(round_level(src[i]));
    }
    if (!levels.contains(factor.baseline)) {
      throw EmptyFactorLevel("baseline level " + std::to_string(factor.baseline) +
                             " of factor '" + factor.variable + "' absent from data");
    }
    FactorLayout layout;
    layout.variable = factor.variable;
    layout.baseline = factor.baseline;
    for (const std::int64_t level : levels) {
      if (level == factor.baseline) continue;
      std::vector<double> col(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (round_level(src[i]) == level) col[i] = 1.0;
      }
      layout.levels.push_back(level);
      layout.column_index.push_back(columns.size());
      columns.push_back(std::move(col));
      design.column_names.push_back(factor.variable + "=" + std::to_string(level));
    }
    design.factors.push_back(std::move(layout));
  }

  // Absorbed group labels, or an explicit constant when nothing is absorbed.
  if (spec.fixed_effects != FeGroup::None) {
    const std::string group_col = spec.fixed_effects == FeGroup::Year ? "year" : "journal_id";
    const auto src = table.column(group_col);
    std::map<std::int64_t, std::int32_t> group_ids;
    design.group.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(src[i])) {
        throw std::invalid_argument("group column '" + group_col + "' missing at row " +
                                    std::to_string(i));
      }
      const auto [it, inserted] =
          group_ids.emplace(round_level(src[i]), static_cast<std::int32_t>(group_ids.size()));
      design.group[i] = it->second;
    }
    design.n_groups = static_cast<std::int32_t>(group_ids.size());
  } else {
    columns.emplace_back(n, 1.0);
    design.column_names.push_back("const");
  }

  design.x = Matrix(n, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) design.x(i, j) = columns[j][i];
  }
  return design;
}

FitResult fit(const Design& design, const RegressionSpec& spec) {
  const auto n = static_cast<Eigen::Index>(design.x.rows);
  const auto k = static_cast<Eigen::Index>(design.x.cols);
  if (n == 0 || k == 0) throw std::invalid_argument("empty design");
  if (spec.se_type == SeType::ClusterByGroup && design.group.empty()) {
    throw std::invalid_argument("cluster-by-group errors require an absorbed group");
  }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x_map(
      design.x.data.data(), n, k);
  Eigen::MatrixXd x = x_map;
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(design.y.data(), n);

  const bool has_fe = !design.group.empty();
  const std::int32_t n_groups = has_fe ? design.n_groups : 0;

  // Grand means for the xtreg-style constant, taken before demeaning.
  const Eigen::RowVectorXd x_grand_mean = x.colwise().mean();
  const double y_grand_mean = y.mean();

  if (has_fe) {
    // Within transformation: subtract group means from y and every column.
    Eigen::VectorXd group_count = Eigen::VectorXd::Zero(n_groups);
    Eigen::VectorXd y_group_sum = Eigen::VectorXd::Zero(n_groups);
    Eigen::MatrixXd x_group_sum = Eigen::MatrixXd::Zero(n_groups, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::int32_t g = design.group[i];
      group_count[g] += 1.0;
      y_group_sum[g] += y[i];
      x_group_sum.row(g) += x.row(i);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::int32_t g = design.group[i];
      y[i] -= y_group_sum[g] / group_count[g];
      x.row(i) -= x_group_sum.row(g) / group_count[g];
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    const auto& perm = qr.colsPermutation().indices();
    std::string victims;
    for (Eigen::Index j = qr.rank(); j < k; ++j) {
      if (!victims.empty()) victims += ", ";
      victims += design.column_names[static_cast<std::size_t>(perm[j])];
    }
    throw RankDeficient("design matrix is rank deficient; collinear columns: " + victims);
  }

  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd residuals = y - x * beta;
  const double ssr = residuals.squaredNorm();

  const double dof =
      static_cast<double>(n) - static_cast<double>(k) - static_cast<double>(n_groups);
  if (dof < 1.0) throw std::invalid_argument("not enough observations for the parameter count");
  const double sigma2 = ssr / dof;

  // (X'X)^-1 from the QR factors: X P = Q R  =>  (X'X)^-1 = P R^-1 R^-T P'.
  const Eigen::MatrixXd r_upper =
      qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r_upper.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd xtx_inv = r_inv * r_inv.transpose();
  const Eigen::MatrixXd perm = qr.colsPermutation();
  xtx_inv = perm * xtx_inv * perm.transpose();

  Eigen::MatrixXd cov;
  if (spec.se_type == SeType::Classical) {
    cov = sigma2 * xtx_inv;
  } else {
    // CR1 cluster-robust by the absorbed group.
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    std::vector<Eigen::VectorXd> cluster_score(
        static_cast<std::size_t>(n_groups), Eigen::VectorXd::Zero(k));
    for (Eigen::Index i = 0; i < n; ++i) {
      cluster_score[static_cast<std::size_t>(design.group[i])] += x.row(i).transpose() * residuals[i];
    }
    for (const auto& s : cluster_score) meat += s * s.transpose();
    const double g = static_cast<double>(n_groups);
    const double correction =
        (g / (g - 1.0)) * (static_cast<double>(n - 1)) / dof;
    cov = correction * xtx_inv * meat * xtx_inv;
  }

  const double tss = y.squaredNorm();  // y is demeaned within groups already
  const double r2 = tss > 0.0 ? 1.0 - ssr / tss : 1.0;

  FitResult result;
  result.n_obs = n;
  result.n_groups = n_groups;
  result.residual_variance = sigma2;
  result.r2_within = r2;
  result.adj_r2 = 1.0 - (1.0 - r2) * (static_cast<double>(n) - 1.0) / dof;
  result.se_type = spec.se_type == SeType::Classical ? "classical" : "cluster-by-group";
  result.fe_group = fe_name(spec.fixed_effects);
  result.factors = design.factors;
  result.interaction_base_year = design.interaction_base_year;
  result.intercept = has_fe ? y_grand_mean - x_grand_mean.dot(beta) : 0.0;

  result.coefficients.resize(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    Coefficient& c = result.coefficients[static_cast<std::size_t>(j)];
    c.name = design.column_names[static_cast<std::size_t>(j)];
    c.estimate = beta[j];
    c.se = std::sqrt(std::max(0.0, cov(j, j)));
    c.ci_lo = c.estimate - kCi95 * c.se;
    c.ci_hi = c.estimate + kCi95 * c.se;
    c.p_value = c.se > 0.0 ? two_sided_p(c.estimate / c.se) : (c.estimate == 0.0 ? 1.0 : 0.0);
  }
  return result;
}

FitResult fit_table(const DataTable& table, const RegressionSpec& spec) {
  return fit(build_design(table, spec), spec);
}

const Coefficient* FitResult::find(const std::string& name) const {
  for (const Coefficient& c : coefficients) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string FitResult::to_json_text() const {
  nlohmann::json j;
  j["n_obs"] = n_obs;
  j["n_groups"] = n_groups;
  j["r2_within"] = r2_within;
  j["adj_r2"] = adj_r2;
  j["residual_variance"] = residual_variance;
  j["intercept"] = intercept;
  j["intercept_parameterization"] = "grand-mean of absorbed effects";
  j["se_type"] = se_type;
  j["fixed_effects_group"] = fe_group;
  j["interaction_base_year"] = interaction_base_year;
  j["column_order"] = nlohmann::json::array();
  j["coefficients"] = nlohmann::json::array();
  for (const Coefficient& c : coefficients) {
    j["column_order"].push_back(c.name);
    j["coefficients"].push_back({{"name", c.name},
                                 {"estimate", c.estimate},
                                 {"se", c.se},
                                 {"ci_lo", c.ci_lo},
                                 {"ci_hi", c.ci_hi},
                                 {"p_value", c.p_value}});
  }
  return j.dump(2);
}

void FitResult::write_json(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_json_text() << '\n';
}

std::vector<LevelEffect> marginal_effects(const FitResult& fit, const std::string& factor) {
  const FactorLayout* layout = nullptr;
  for (const FactorLayout& f : fit.factors) {
    if (f.variable == factor) {
      layout = &f;
      break;
    }
  }
  if (!layout) throw UnknownFactor("factor '" + factor + "' not present in fit");

  std::vector<LevelEffect> effects;
  LevelEffect baseline;
  baseline.level = layout->baseline;
  baseline.is_baseline = true;
  effects.push_back(baseline);
  for (std::size_t i = 0; i < layout->levels.size(); ++i) {
    const Coefficient& c = fit.coefficients[layout->column_index[i]];
    LevelEffect e;
    e.level = layout->levels[i];
    e.estimate = c.estimate;
    e.se = c.se;
    e.ci_lo = c.ci_lo;
    e.ci_hi = c.ci_hi;
    e.p_value = c.p_value;
    e.significant = c.p_value < 0.05;
    effects.push_back(e);
  }
  std::sort(effects.begin(), effects.end(),
            [](const LevelEffect& a, const LevelEffect& b) { return a.level < b.level; });
  return effects;
}

GroupGapDecomposition decompose_group_gap(const DataTable& table,
                                          const RegressionSpec& full_spec,
                                          const std::string& group_column,
                                          const std::string& covariate) {
  const auto groups = table.column(group_column);
  std::set<std::int64_t> distinct;
  for (const double g : groups) {
    if (!std::isnan(g)) distinct.insert(round_level(g));
  }
  if (distinct.size() < 2) {
    throw SingleGroup("group column '" + group_column + "' has " +
                      std::to_string(distinct.size()) + " level(s), need 2");
  }
  if (distinct.size() > 2) {
    throw std::invalid_argument("group column '" + group_column + "' has more than 2 levels");
  }
  const std::int64_t g0 = *distinct.begin();
  const std::int64_t g1 = *std::next(distinct.begin());

  // Locate the covariate term in the full model.
  const Term* cov_term = nullptr;
  for (const Term& term : full_spec.terms) {
    if (term.variable == covariate && term.transform == TermTransform::Log &&
        term.interaction == InteractWith::None) {
      cov_term = &term;
      break;
    }
  }
  if (!cov_term) {
    throw std::invalid_argument("full model has no plain log term for covariate '" + covariate +
                                "'");
  }

  GroupGapDecomposition out;

  // Raw gap in the transformed dependent.
  const auto dep_col = full_spec.dep_transform == DepTransform::NormCd
                           ? table.column("normcd")
                           : table.column(full_spec.dependent);
  double sum0 = 0.0, sum1 = 0.0, ss0 = 0.0, ss1 = 0.0;
  std::int64_t n0 = 0, n1 = 0;
  const auto cov_col = table.column(covariate);
  double cov_log_sum0 = 0.0, cov_log_sum1 = 0.0;
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    if (!(cov_col[i] > 0.0)) {
      throw NonPositiveLog("covariate '" + covariate + "' is " + std::to_string(cov_col[i]) +
                           " at row " + std::to_string(i) + ", log requires > 0");
    }
    double v = dep_col[i];
    if (full_spec.dep_transform == DepTransform::Abs) v = std::abs(v);
    if (round_level(groups[i]) == g1) {
      sum1 += v;
      ++n1;
      cov_log_sum1 += std::log(cov_col[i]);
    } else {
      sum0 += v;
      ++n0;
      cov_log_sum0 += std::log(cov_col[i]);
    }
  }
  const double mean0 = sum0 / static_cast<double>(n0);
  const double mean1 = sum1 / static_cast<double>(n1);
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    double v = dep_col[i];
    if (full_spec.dep_transform == DepTransform::Abs) v = std::abs(v);
    if (round_level(groups[i]) == g1) {
      ss1 += (v - mean1) * (v - mean1);
    } else {
      ss0 += (v - mean0) * (v - mean0);
    }
  }
  out.n_group0 = n0;
  out.n_group1 = n1;
  out.raw_gap = mean1 - mean0;
  const double var0 = n0 > 1 ? ss0 / static_cast<double>(n0 - 1) : 0.0;
  const double var1 = n1 > 1 ? ss1 / static_cast<double>(n1 - 1) : 0.0;
  out.raw_gap_se =
      std::sqrt(var0 / static_cast<double>(n0) + var1 / static_cast<double>(n1));
  out.mean_covariate_group0 = cov_log_sum0 / static_cast<double>(n0);
  out.mean_covariate_group1 = cov_log_sum1 / static_cast<double>(n1);

  // (A) full model as given.
  out.fit_without_indicator = fit_table(table, full_spec);

  // (B) indicator substituting for the covariate term.
  DataTable with_indicator = table;
  std::vector<double> indicator(table.num_rows(), 0.0);
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    indicator[i] = round_level(groups[i]) == g1 ? 1.0 : 0.0;
  }
  const std::string indicator_name = group_column + "_indicator";
  with_indicator.add_column(indicator_name, std::move(indicator));
  RegressionSpec indicator_spec = full_spec;
  indicator_spec.terms.clear();
  for (const Term& term : full_spec.terms) {
    if (&term == cov_term) {
      indicator_spec.terms.push_back({indicator_name, TermTransform::Identity, InteractWith::None});
    } else {
      indicator_spec.terms.push_back(term);
    }
  }
  out.fit_with_indicator = fit_table(with_indicator, indicator_spec);
  out.delta_indicator = out.fit_with_indicator.find(indicator_name)->estimate;

  const Coefficient* b_cov = out.fit_without_indicator.find(transform_name(*cov_term));
  out.covariate_explained =
      b_cov->estimate * (out.mean_covariate_group1 - out.mean_covariate_group0);
  if (std::abs(out.raw_gap) >= 2.0 * out.raw_gap_se && out.raw_gap != 0.0) {
    out.fraction_explained = out.covariate_explained / out.raw_gap;
  }
  return out;
}

std::string GroupGapDecomposition::to_json_text() const {
  nlohmann::json j;
  j["raw_gap"] = raw_gap;
  j["raw_gap_se"] = raw_gap_se;
  j["delta_indicator"] = delta_indicator;
  j["covariate_explained"] = covariate_explained;
  if (fraction_explained) {
    j["fraction_explained"] = *fraction_explained;
  } else {
    j["fraction_explained"] = nullptr;
    j["fraction_explained_note"] = "raw gap within 2 standard errors of zero";
  }
  j["mean_covariate_group0"] = mean_covariate_group0;
  j["mean_covariate_group1"] = mean_covariate_group1;
  j["n_group0"] = n_group0;
  j["n_group1"] = n_group1;
  j["fit_without_indicator"] = nlohmann::json::parse(fit_without_indicator.to_json_text());
  j["fit_with_indicator"] = nlohmann::json::parse(fit_with_indicator.to_json_text());
  return j.dump(2);
}

}  // namespace citesim
