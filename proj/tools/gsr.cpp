// gsr: experiment runner, weight designer and theory checker.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gsr/analysis.hpp"
#include "gsr/design.hpp"
#include "gsr/error.hpp"
#include "gsr/experiment.hpp"

namespace {

using namespace gsr;

int run_command(const std::string& config_path, const std::string& data_path, const std::string& out_path) {
  const ExperimentConfig cfg = parse_config_file(config_path);
  const ResultTable table = run_experiment(cfg, data_path);
  if (out_path.empty() || out_path == "-") emit_csv(table, std::cout);
  else emit_csv(table, out_path);
  return 0;
}

int design_command(const std::string& graph_path, const std::string& prior_path, const std::string& method,
                   const std::string& out_path, double tolerance) {
  const Laplacian lap(read_edge_list_file(graph_path));
  const DesignProblem problem = parse_design_prior_file(prior_path, lap);
  SdpSolverConfig cfg;
  cfg.tolerance = tolerance;
  DesignResult result;
  if (method == "prony") result = design_prony(problem, cfg);
  else if (method == "sdr") result = design_sdr(problem, cfg);
  else if (method == "minmax-prony") result = design_minmax_prony(problem, cfg);
  else if (method == "minmax-sdr") result = design_minmax_sdr(problem, cfg);
  else throw DomainError("unknown design method " + method);
  if (out_path.empty() || out_path == "-") {
    write_design_record(std::cout, result);
    std::cout << '\n';
  } else {
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write " + out_path);
    write_design_record(out, result);
    out << '\n';
  }
  return 0;
}

/// Reads a weight vector from a file when `arg` names one, else parses it inline.
VectorXd read_weights(const std::string& arg) {
  if (std::filesystem::is_regular_file(arg)) {
    std::ifstream in(arg);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    for (char& c : text)
      if (c == '\n' || c == '\r') c = ',';
    return parse_vector_csv(text);
  }
  return parse_vector_csv(arg);
}

int check_command(const std::string& graph_path, double w0, const std::string& omega_arg,
                  const std::string& signal_arg, double sigma2) {
  const Laplacian lap(read_edge_list_file(graph_path));
  const VectorXd w = read_weights(omega_arg);
  if (w.size() != lap.size()) throw DimensionError("omega length does not match the graph");
  const bool lemma1 = check_lemma1(w0, w);
  std::cout << "lemma1: " << (lemma1 ? "holds" : "fails") << "\n";
  if (signal_arg.empty() || !(sigma2 > 0.0)) {
    std::cout << "theorem1: not evaluated (needs --signal and --sigma2)\n"
              << "corollary1: not evaluated (needs --signal and --sigma2)\n";
    return 0;
  }
  const VectorXd x = read_weights(signal_arg);
  if (x.size() != lap.size()) throw DimensionError("signal length does not match the graph");
  const TheoremQuantities tq = theorem_quantities(lap, x, NoiseModel::isotropic(lap.size(), sigma2));
  std::cout << "theorem1: " << (check_theorem1(w0, w, tq) ? "holds" : "fails") << "\n"
            << "corollary1: " << (check_corollary1(w, tq) ? "holds" : "fails") << "\n"
            << "rho: " << tq.rho << "\n"
            << "gamma: " << tq.gamma << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Node-adaptive Tikhonov graph signal reconstruction"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path;
  auto* run = app.add_subcommand("run", "Run an experiment config and write the result CSV");
  run->add_option("--config", config_path, "Experiment config (key = value lines)")->required()->check(CLI::ExistingFile);
  run->add_option("--data", data_path, "Station CSV for dataset experiments");
  run->add_option("--out", out_path, "Output CSV ('-' for stdout)");

  std::string graph_path, prior_path, method, record_path;
  double tolerance = 1e-7;
  auto* design = app.add_subcommand("design", "Design node-adaptive weights");
  design->add_option("--graph", graph_path, "Edge list")->required()->check(CLI::ExistingFile);
  design->add_option("--prior", prior_path, "Prior file")->required()->check(CLI::ExistingFile);
  design->add_option("--method", method, "Design method")
      ->required()
      ->check(CLI::IsMember({"prony", "sdr", "minmax-prony", "minmax-sdr"}));
  design->add_option("--out", record_path, "Output record ('-' for stdout)");
  design->add_option("--tolerance", tolerance, "SDP residual and gap tolerance")->check(CLI::PositiveNumber);

  std::string check_graph, omega_arg, signal_arg;
  double w0 = 0.0, sigma2 = 0.0;
  auto* check = app.add_subcommand("check", "Evaluate the Lemma 1, Theorem 1 and Corollary 1 conditions");
  check->add_option("--graph", check_graph, "Edge list")->required()->check(CLI::ExistingFile);
  check->add_option("--w0", w0, "Node-invariant weight")->required();
  check->add_option("--omega", omega_arg, "Weights: file or comma-separated list")->required();
  check->add_option("--signal", signal_arg, "True signal: file or comma-separated list");
  check->add_option("--sigma2", sigma2, "Isotropic noise variance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config_path, data_path, out_path);
    if (*design) return design_command(graph_path, prior_path, method, record_path, tolerance);
    if (*check) return check_command(check_graph, w0, omega_arg, signal_arg, sigma2);
  } catch (const gsr::Error& e) {
    std::cerr << "gsr: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
