// steinflow: run the SVGD / MK-SVGD experiments from the command line.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "steinflow/data.hpp"
#include "steinflow/experiment.hpp"

namespace {

using steinflow::ExperimentConfig;
using steinflow::KernelMode;
using steinflow::Task;
using steinflow::WeightMode;

struct Options {
  ExperimentConfig config;
  std::string kernel = "multi";
  std::string weight_mode = "closed_form";
  std::string format = "csv";
  std::string delimiter = ",";
  bool no_header = false;
  bool no_standardize = false;
  std::string config_file;
};

// Config-file support: the file's entries become flags inserted right after
// the subcommand name, so anything given on the command line comes later and
// wins (options take their last value). Top-level keys and a section named
// after the subcommand are both accepted.
std::vector<std::string> config_tokens(CLI::App* sub, const std::string& path) {
  std::vector<std::string> out;
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub->get_name())) continue;
    if (item.name == "config") throw CLI::ValidationError("config", "a config file cannot name another config file");
    const CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw CLI::ValidationError(path, "unknown key '" + item.name + "'");
    if (opt->get_expected_min() == 0) {
      const std::string v = item.inputs.empty() ? "true" : item.inputs.front();
      if (v == "true" || v == "1" || v == "yes" || v == "on") out.push_back("--" + item.name);
      continue;
    }
    for (const std::string& v : item.inputs) {
      out.push_back("--" + item.name);
      out.push_back(v);
    }
  }
  return out;
}

// Returns argv with the config entries spliced in; unchanged without --config.
std::vector<std::string> expand_config(CLI::App& app, int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::size_t sub_pos = 0;
  CLI::App* sub = nullptr;
  for (std::size_t i = 1; i < args.size() && sub == nullptr; ++i) {
    for (CLI::App* candidate : app.get_subcommands([](CLI::App*) { return true; })) {
      if (candidate->get_name() == args[i]) {
        sub = candidate;
        sub_pos = i;
      }
    }
  }
  if (sub == nullptr) return args;
  std::string path;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const std::vector<std::string> extra = config_tokens(sub, path);
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, extra.begin(), extra.end());
  return args;
}

void add_common(CLI::App* sub, Options& o, bool with_data) {
  ExperimentConfig& c = o.config;
  sub->add_option("--config", o.config_file, "Read option defaults from an INI/TOML file (keys named after the long flags); flags win");
  sub->add_option("--seed", c.seed, "Base seed; trial k uses seed + k")->capture_default_str();
  sub->add_option("--trials", c.trials, "Number of seeded trials")->capture_default_str();
  sub->add_option("--particles", c.particles, "Particle count")->capture_default_str();
  sub->add_option("--iters", c.iterations, "Iterations")->capture_default_str();
  sub->add_option("--step", c.step, "AdaGrad base step size")->capture_default_str();
  sub->add_option("--grid-lo", c.grid_lo, "Smallest bandwidth of the grid")->capture_default_str();
  sub->add_option("--grid-factor", c.grid_factor, "Ratio between adjacent bandwidths")->capture_default_str();
  sub->add_option("--grid-count", c.grid_count, "Number of base kernels")->capture_default_str();
  sub->add_option("--kernel", o.kernel, "multi | fixed | median")
      ->check(CLI::IsMember({"multi", "fixed", "median"}))
      ->capture_default_str();
  sub->add_option("--bandwidth", c.fixed_bandwidth, "Bandwidth for --kernel fixed")->capture_default_str();
  sub->add_option("--weight-mode", o.weight_mode, "closed_form | adagrad_ascent")
      ->check(CLI::IsMember({"closed_form", "adagrad_ascent"}))
      ->capture_default_str();
  sub->add_option("--weight-step", c.weight_step, "Step size for adagrad_ascent weights")->capture_default_str();
  sub->add_option("--weight-cadence", c.weight_cadence, "Update weights every k iterations")->capture_default_str();
  sub->add_option("--out", c.out_dir, "Output directory for traces and summaries");
  if (!with_data) return;
  sub->add_option("--data", c.dataset, "Dataset path")->required();
  sub->add_option("--format", o.format, "csv | libsvm")->check(CLI::IsMember({"csv", "libsvm"}))->capture_default_str();
  sub->add_option("--label", c.label_column, "Label column: index (negative from the end) or header name");
  sub->add_option("--delimiter", o.delimiter, "CSV delimiter; 'space' splits on whitespace")->capture_default_str();
  sub->add_flag("--no-header", o.no_header, "CSV has no header row");
  sub->add_option("--batch", c.batch, "Minibatch size (0 = full batch)")->capture_default_str();
  sub->add_option("--split", c.train_fraction, "Training fraction")->capture_default_str();
  sub->add_option("--subsample", c.subsample, "Seeded row subsample before splitting (0 = all)")->capture_default_str();
  sub->add_option("--eval-every", c.eval_every, "Evaluate test metrics every k iterations")->capture_default_str();
}

void finalize(Options& o) {
  ExperimentConfig& c = o.config;
  c.kernel = o.kernel == "multi" ? KernelMode::kMulti : o.kernel == "fixed" ? KernelMode::kFixed : KernelMode::kMedian;
  c.weight_mode = o.weight_mode == "closed_form" ? WeightMode::kClosedForm : WeightMode::kAdaGradAscent;
  c.libsvm = o.format == "libsvm";
  c.header = !o.no_header;
  c.delimiter = o.delimiter == "space" ? ' ' : o.delimiter == "tab" ? '\t' : o.delimiter.empty() ? ',' : o.delimiter[0];
  if (o.no_standardize) c.standardize_features = false;
}

void print_summary(const steinflow::ExperimentOutcome& outcome) {
  std::cout << steinflow::summary_to_text(outcome.aggregate);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein variational gradient descent with multiple kernels"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Options gaussian{ExperimentConfig::defaults(Task::kGaussian)};
  Options logreg{ExperimentConfig::defaults(Task::kLogreg)};
  Options bnn{ExperimentConfig::defaults(Task::kBnn)};

  auto* g = app.add_subcommand("gaussian", "Two-dimensional Gaussian toy target");
  add_common(g, gaussian, false);

  auto* l = app.add_subcommand("logreg", "Bayesian logistic regression on a binary dataset");
  add_common(l, logreg, true);
  l->add_flag("--no-standardize", logreg.no_standardize, "Keep raw feature scales");
  l->add_option("--blr-shape", logreg.config.blr_shape, "Gamma shape a of the precision prior")->capture_default_str();
  l->add_option("--blr-rate", logreg.config.blr_rate, "Gamma rate b of the precision prior")->capture_default_str();

  auto* b = app.add_subcommand("bnn", "Bayesian neural network regression");
  add_common(b, bnn, true);
  b->add_option("--hidden", bnn.config.hidden, "Hidden units")->capture_default_str();

  std::string convert_in, convert_out;
  std::size_t convert_width = 0;
  auto* conv = app.add_subcommand("convert", "Convert a libsvm file to dense CSV");
  conv->add_option("input", convert_in, "libsvm input")->required();
  conv->add_option("output", convert_out, "CSV output")->required();
  conv->add_option("--features", convert_width, "Feature count (0 = infer)");

  try {
    std::vector<std::string> args = expand_config(app, argc, argv);
    std::reverse(args.begin(), args.end());
    args.pop_back();  // program name
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    return app.exit(e);
  }

  try {
    if (*conv) {
      const steinflow::Dataset data = steinflow::load_libsvm(convert_in, steinflow::LabelKind::kRegression, convert_width);
      steinflow::write_csv(data, convert_out);
      std::cout << "wrote " << data.size() << " rows x " << data.num_features() << " features to " << convert_out << '\n';
      return 0;
    }
    Options* chosen = *g ? &gaussian : *l ? &logreg : &bnn;
    finalize(*chosen);
    const steinflow::ExperimentOutcome outcome = steinflow::run_experiment(chosen->config);
    print_summary(outcome);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
