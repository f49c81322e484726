#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "rdlasso/csv.hpp"
#include "rdlasso/errors.hpp"
#include "rdlasso/rdd.hpp"
#include "rdlasso/sim.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitEstimation = 4;
constexpr int kExitIo = 5;

struct BandwidthChoice {
  rdlasso::BandwidthMode mode = rdlasso::BandwidthMode::adaptive;
  double h = 0.0;
  double b = 0.0;
};

BandwidthChoice parse_bandwidth(const std::string& spec) {
  BandwidthChoice c;
  if (spec == "auto-nocov") {
    c.mode = rdlasso::BandwidthMode::auto_without_covariates;
  } else if (spec == "auto-cov") {
    c.mode = rdlasso::BandwidthMode::auto_with_covariates;
  } else if (spec == "adaptive") {
    c.mode = rdlasso::BandwidthMode::adaptive;
  } else if (spec.rfind("h=", 0) == 0) {
    c.mode = rdlasso::BandwidthMode::fixed;
    std::string rest = spec.substr(2);
    const auto comma = rest.find(',');
    std::string h_part = rest.substr(0, comma);
    c.h = std::stod(h_part);
    if (comma != std::string::npos) {
      std::string b_part = rest.substr(comma + 1);
      if (b_part.rfind("b=", 0) == 0) b_part = b_part.substr(2);
      c.b = std::stod(b_part);
    }
  } else {
    throw CLI::ValidationError("--bandwidth",
                               "expected auto-nocov|auto-cov|adaptive|h=<v>[,b=<v>]");
  }
  return c;
}

rdlasso::Method parse_method(const std::string& name) {
  if (name == "standard") return rdlasso::Method::standard;
  if (name == "adjusted" || name == "covariate-adjusted") {
    return rdlasso::Method::covariate_adjusted;
  }
  if (name == "selection" || name == "covariate-selection") {
    return rdlasso::Method::covariate_selection;
  }
  throw CLI::ValidationError("--method", "expected standard|adjusted|selection");
}

json estimate_to_json(const rdlasso::RddEstimate& est) {
  json j;
  j["tau_hat"] = est.tau_hat;
  j["tau_bc"] = est.tau_bc;
  j["se_robust"] = est.se_robust;
  j["ci_lower"] = est.ci_lower;
  j["ci_upper"] = est.ci_upper;
  j["p_value"] = est.p_value;
  j["level"] = est.confidence_level;
  j["h"] = est.bandwidths.h;
  j["b"] = est.bandwidths.b;
  j["hb_restricted"] = est.bandwidths.restricted;
  j["n_minus"] = est.n_minus;
  j["n_plus"] = est.n_plus;
  j["selected"] = est.selected_labels;
  switch (est.method_used) {
    case rdlasso::Method::standard: j["method"] = "standard"; break;
    case rdlasso::Method::covariate_adjusted: j["method"] = "adjusted"; break;
    case rdlasso::Method::covariate_selection: j["method"] = "selection"; break;
  }
  return j;
}

void write_estimate_text(const rdlasso::RddEstimate& est, std::ostream& out) {
  out << std::fixed << std::setprecision(6);
  out << "RD estimate:          " << est.tau_hat << "\n";
  out << "Bias-corrected:       " << est.tau_bc << "\n";
  out << "Robust SE:            " << est.se_robust << "\n";
  out << "Robust " << std::setprecision(0) << est.confidence_level * 100.0
      << std::setprecision(6) << "% CI:        [" << est.ci_lower << ", "
      << est.ci_upper << "]\n";
  out << "Robust p-value:       " << est.p_value << "\n";
  out << "Bandwidths (h, b):    (" << est.bandwidths.h << ", " << est.bandwidths.b
      << ")\n";
  out << "Effective n (-, +):   (" << est.n_minus << ", " << est.n_plus << ")\n";
  out << "Selected covariates:  ";
  if (est.selected_labels.empty()) {
    out << "none";
  } else {
    for (std::size_t i = 0; i < est.selected_labels.size(); ++i) {
      if (i) out << ", ";
      out << est.selected_labels[i];
    }
  }
  out << "\n";
}

void write_estimate_csv(const rdlasso::RddEstimate& est, std::ostream& out) {
  out << "tau_hat,tau_bc,se_robust,ci_lower,ci_upper,p_value,level,h,b,"
         "n_minus,n_plus,selected\n";
  out << std::setprecision(17);
  std::string sel;
  for (std::size_t i = 0; i < est.selected_labels.size(); ++i) {
    if (i) sel += ';';
    sel += est.selected_labels[i];
  }
  out << est.tau_hat << ',' << est.tau_bc << ',' << est.se_robust << ','
      << est.ci_lower << ',' << est.ci_upper << ',' << est.p_value << ','
      << est.confidence_level << ',' << est.bandwidths.h << ',' << est.bandwidths.b
      << ',' << est.n_minus << ',' << est.n_plus << ',' << sel << '\n';
}

int write_output(const std::string& path, const std::string& payload) {
  if (path.empty() || path == "-") {
    std::cout << payload;
    return kExitOk;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "io error: cannot open " << path << "\n";
    return kExitIo;
  }
  out << payload;
  if (!out) {
    std::cerr << "io error: write failed for " << path << "\n";
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regression discontinuity estimation with covariate selection"};
  app.require_subcommand(1);

  // Shared options.
  std::string format = "text";
  std::string output_path;
  std::string kernel_name = "triangular";
  std::string bandwidth_spec = "adaptive";
  std::string lambda_spec = "plugin";
  std::string selection_rule = "support";
  std::string method_name = "selection";
  double level = 0.95;
  bool hb_restricted = false;
  int threads = 0;

  // estimate options.
  std::string input_path, running_col, outcome_col, takeup_col, covariates_spec;
  std::string design_name = "sharp";
  double cutoff = 0.0;
  double kink_slope = 0.0;

  CLI::App* cmd_est = app.add_subcommand("estimate", "Estimate from a CSV dataset");
  cmd_est->add_option("input", input_path, "CSV file with a header row")->required();
  cmd_est->add_option("--cutoff", cutoff, "Cutoff of the running variable")->required();
  cmd_est->add_option("--running", running_col, "Running-variable column")->required();
  cmd_est->add_option("--outcome", outcome_col, "Outcome column")->required();
  cmd_est->add_option("--takeup", takeup_col, "Treatment take-up column (fuzzy)");
  cmd_est->add_option("--covariates", covariates_spec,
                      "Comma list of covariate columns, or all-others");
  cmd_est->add_option("--method", method_name, "standard|adjusted|selection");
  cmd_est->add_option("--design", design_name, "sharp|fuzzy|kink");
  cmd_est->add_option("--kink-slope", kink_slope, "Known policy slope change (kink)");
  cmd_est->add_option("--kernel", kernel_name, "uniform|triangular|epanechnikov");
  cmd_est->add_option("--bandwidth", bandwidth_spec,
                      "auto-nocov|auto-cov|adaptive|h=<v>[,b=<v>]");
  cmd_est->add_option("--level", level, "Confidence level in (0,1)");
  cmd_est->add_flag("--hb-restricted", hb_restricted, "Force h == b");
  cmd_est->add_option("--lambda", lambda_spec, "plugin|cv|<value>");
  cmd_est->add_option("--selection", selection_rule, "support|threshold");
  cmd_est->add_option("--format", format, "json|csv|text");
  cmd_est->add_option("--output", output_path, "Output path (default stdout)");

  // simulate options.
  std::string dgp_name = "dgp1";
  long long sim_p = 5, sim_n = 500, reps = 100;
  unsigned long long seed = 0;

  CLI::App* cmd_sim = app.add_subcommand("simulate", "Run the Monte Carlo engine");
  cmd_sim->add_option("--dgp", dgp_name, "dgp1|dgp2|dgp3")->required();
  cmd_sim->add_option("--p", sim_p, "Covariate count")->required();
  cmd_sim->add_option("--n", sim_n, "Sample size")->required();
  cmd_sim->add_option("--reps", reps, "Replications")->required();
  cmd_sim->add_option("--seed", seed, "RNG seed");
  cmd_sim->add_option("--threads", threads, "Worker threads (0 = auto)");
  cmd_sim->add_option("--kernel", kernel_name, "uniform|triangular|epanechnikov");
  cmd_sim->add_option("--level", level, "Confidence level in (0,1)");
  cmd_sim->add_flag("--hb-restricted", hb_restricted, "Force h == b");
  cmd_sim->add_option("--format", format, "csv|json");
  cmd_sim->add_option("--output", output_path, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (cmd_est->parsed()) {
      rdlasso::ColumnMapping mapping;
      mapping.running = running_col;
      mapping.outcome = outcome_col;
      if (!takeup_col.empty()) mapping.takeup = takeup_col;
      if (covariates_spec == "all-others") {
        mapping.covariates_all_others = true;
      } else if (!covariates_spec.empty()) {
        std::stringstream ss(covariates_spec);
        std::string item;
        while (std::getline(ss, item, ',')) mapping.covariates.push_back(item);
      }

      rdlasso::RddRequest request;
      rdlasso::LoadReport report;
      request.sample = rdlasso::load_csv(input_path, mapping, cutoff, &report);
      request.method = parse_method(method_name);
      if (design_name == "sharp") {
        request.design_kind = rdlasso::DesignKind::sharp;
      } else if (design_name == "fuzzy") {
        request.design_kind = rdlasso::DesignKind::fuzzy;
      } else if (design_name == "kink") {
        request.design_kind = rdlasso::DesignKind::kink;
        request.kink_denominator = kink_slope;
      } else {
        std::cerr << "config error: unknown design " << design_name << "\n";
        return kExitConfig;
      }
      request.kernel = rdlasso::kernel_family_from_string(kernel_name);
      const BandwidthChoice bwc = parse_bandwidth(bandwidth_spec);
      request.bandwidth_mode = bwc.mode;
      request.fixed_h = bwc.h;
      request.fixed_b = bwc.b;
      if (!(level > 0.0 && level < 1.0)) {
        std::cerr << "config error: --level must be in (0, 1)\n";
        return kExitConfig;
      }
      request.confidence_level = level;
      request.hb_restricted = hb_restricted;
      if (lambda_spec == "plugin") {
        request.lambda_rule = rdlasso::LambdaRule::plugin;
      } else if (lambda_spec == "cv") {
        request.lambda_rule = rdlasso::LambdaRule::cross_validation;
      } else {
        request.lambda_rule = rdlasso::LambdaRule::fixed;
        request.fixed_lambda = std::stod(lambda_spec);
      }
      if (selection_rule == "support") {
        request.selection_rule = rdlasso::ThresholdRule::support;
      } else if (selection_rule == "threshold") {
        request.selection_rule = rdlasso::ThresholdRule::scaled_threshold;
      } else {
        std::cerr << "config error: unknown selection rule " << selection_rule << "\n";
        return kExitConfig;
      }

      const rdlasso::RddEstimate est = rdlasso::estimate(request);
      std::ostringstream payload;
      if (format == "json") {
        json j = estimate_to_json(est);
        j["rows_loaded"] = report.rows_loaded;
        j["rows_dropped"] = report.rows_dropped;
        payload << j.dump(2) << "\n";
      } else if (format == "csv") {
        write_estimate_csv(est, payload);
      } else if (format == "text") {
        write_estimate_text(est, payload);
        if (report.rows_dropped > 0) {
          payload << "Dropped rows:         " << report.rows_dropped << "\n";
        }
      } else {
        std::cerr << "config error: unknown format " << format << "\n";
        return kExitConfig;
      }
      return write_output(output_path, payload.str());
    }

    // simulate
    rdlasso::DgpSpec spec;
    spec.dgp = rdlasso::dgp_from_string(dgp_name);
    spec.p = sim_p;
    spec.n = sim_n;
    spec.seed = seed;
    rdlasso::McOptions options;
    options.level = level;
    options.threads = threads;
    options.kernel = rdlasso::kernel_family_from_string(kernel_name);
    options.hb_restricted = hb_restricted;
    const rdlasso::McSummary summary =
        rdlasso::run_monte_carlo(spec, reps, rdlasso::default_mc_methods(), options);

    std::ostringstream payload;
    if (format == "json") {
      json j;
      j["dgp"] = rdlasso::to_string(spec.dgp);
      j["p"] = spec.p;
      j["n"] = spec.n;
      j["reps"] = summary.reps;
      j["tau_true"] = summary.tau_true;
      j["methods"] = json::array();
      for (const auto& m : summary.methods) {
        json mj;
        mj["name"] = m.name;
        mj["bias"] = m.bias;
        mj["rmse"] = m.rmse;
        mj["coverage"] = m.coverage;
        mj["coverage_se"] = m.coverage_se;
        mj["mean_length"] = m.mean_length;
        mj["h_mean"] = m.h_mean;
        mj["h_sd"] = m.h_sd;
        mj["b_mean"] = m.b_mean;
        mj["selected_mean"] = m.selected_mean;
        mj["selected_min"] = m.selected_min;
        mj["selected_max"] = m.selected_max;
        mj["failures"] = m.failures;
        j["methods"].push_back(mj);
      }
      payload << j.dump(2) << "\n";
    } else {
      rdlasso::emit_tables({summary}, payload);
    }
    return write_output(output_path, payload.str());
  } catch (const rdlasso::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const rdlasso::EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
