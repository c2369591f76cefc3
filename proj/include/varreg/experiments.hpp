#ifndef VARREG_EXPERIMENTS_HPP
#define VARREG_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "varreg/metrics.hpp"
#include "varreg/solver.hpp"

namespace varreg {

// Coefficient ground-truth descriptor; jump positions stay analytic.
struct CoefficientDescriptor {
  std::string kind = "constant";     // constant | affine | cells
  double value = 1.5;                // constant
  double a0 = 1.0, a1 = 1.0;         // affine: a0 + a1 * x
  std::vector<double> cells;         // cells: one value per cell

  PiecewiseConstantField sample(int n) const;
  double eval(double x) const;       // cells: uses its own grid
};

struct ProblemConfig {
  std::string load = "one";          // load descriptor ("one" or "sin")
  double load_scale = 1.0;
  double c_lower = 0.1;
  int m = 256;
  int m_ref = kReferenceM;
  double delta = 0.0;
  std::uint64_t seed = 1;
  CoefficientDescriptor a_true;

  DiffusionProblem make_problem() const;
};

struct AlphaRuleConfig {
  double C0 = 1.0;
  double theta = 1.0;
  double C1 = 1.0;
};

struct ExperimentConfig {
  std::string study;                  // density|semiconv|rates|forward-check|counterexample|stability
  std::string space = "LINF";        // BV_L1 | BV_L2 | BD | LINF
  std::vector<std::string> targets;  // density target names
  std::vector<int> grids;            // n values
  std::vector<int> fem;              // m values
  std::vector<double> deltas;        // nonnegative decreasing
  std::vector<std::uint64_t> seeds;
  double lp = 2.0;                    // Z-norm exponent for the LINF metric
  double final_threshold = 0.05;      // density final-d verdict
  AlphaRuleConfig alpha_rule;
  ProblemConfig problem;
  RegularizerSpec reg;
  TikhonovConfig solver;
  bool trace = false;
  int jobs = 1;
  std::string hash;                   // FNV-1a of the canonical config dump
};

// Throws std::invalid_argument on malformed or inconsistent configs.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text);

struct StudyReport {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_labels;  // optional leading "label" column

  struct Slope {
    std::string name;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
  };
  std::vector<Slope> slopes;

  struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string claim;  // which statement this verdict proxies
  };
  std::vector<Verdict> verdicts;

  std::string config_hash;
  std::vector<std::string> notes;

  bool all_pass() const;
};

StudyReport run_density(const ExperimentConfig& config);
StudyReport run_semiconv(const ExperimentConfig& config);
StudyReport run_rates(const ExperimentConfig& config);
StudyReport run_forward_check(const ExperimentConfig& config);
StudyReport run_counterexample(const ExperimentConfig& config);
StudyReport run_stability(const ExperimentConfig& config);
StudyReport run_study(const ExperimentConfig& config);

// Writes report.csv, slopes.csv and verdicts.csv into out_dir.
void write_report(const StudyReport& report, const std::string& out_dir);

// Log-log least squares of y against x (positive pairs only).
StudyReport::Slope fit_loglog(const std::string& name, const std::vector<double>& x,
                              const std::vector<double>& y);

// Monotone-decrease trend allowing at most `max_inversions` upticks.
bool decreasing_trend(const std::vector<double>& values, int max_inversions = 1);

}  // namespace varreg

#endif
