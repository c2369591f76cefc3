#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "varreg/experiments.hpp"

namespace {

int run(const std::string& study, const std::string& config_path, const std::string& out_dir,
        bool trace, int jobs) {
  varreg::ExperimentConfig config;
  try {
    config = varreg::load_experiment_config(config_path);
    if (config.study != study) {
      std::fprintf(stderr, "config error: config declares study '%s' but '%s' was requested\n",
                   config.study.c_str(), study.c_str());
      return 2;
    }
    config.trace = trace;
    config.solver.trace = trace;
    config.jobs = jobs;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  varreg::StudyReport report;
  try {
    report = varreg::run_study(config);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  }

  try {
    varreg::write_report(report, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cannot write report: %s\n", e.what());
    return 3;
  }

  for (const auto& note : report.notes) std::printf("note: %s\n", note.c_str());
  for (const auto& v : report.verdicts)
    std::printf("%-32s %s  value=%.6g threshold=%.6g  (%s)\n", v.name.c_str(),
                v.pass ? "pass" : "FAIL", v.value, v.threshold, v.claim.c_str());
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"varreg: variational regularization studies"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  bool trace = false;
  int jobs = 1;

  const std::vector<std::string> studies = {"density",        "semiconv", "rates",
                                            "forward-check",  "counterexample",
                                            "stability"};
  std::string selected;
  for (const auto& s : studies) {
    auto* sub = app.add_subcommand(s);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--trace", trace, "record per-iteration solver traces");
    sub->add_option("--jobs", jobs, "worker threads for independent rows");
    sub->callback([&selected, s] { selected = s; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run(selected, config_path, out_dir, trace, jobs);
}
