// SPDX-License-Identifier: Apache-2.0
// polarnn command-line front end.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "polarnn/channel.hpp"
#include "polarnn/decoders.hpp"
#include "polarnn/error.hpp"
#include "polarnn/eval_harness.hpp"
#include "polarnn/nn_builder.hpp"
#include "polarnn/parallel.hpp"
#include "polarnn/polar_code.hpp"
#include "polarnn/trainer.hpp"

using namespace polarnn;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

// Data or verification failure, reported with exit code 3.
struct DataFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string g_command_line;

std::vector<double> parse_snr_range(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ParameterError("bad SNR value '" + s + "'");
    return v;
  };
  if (parts.size() == 1) return {num(parts[0])};
  if (parts.size() != 3) throw ParameterError("SNR range must be start:stop:step");
  const double a = num(parts[0]), b = num(parts[1]), step = num(parts[2]);
  if (!(step > 0) || b < a) throw ParameterError("SNR range needs step > 0 and stop >= start");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * step);
  return out;
}

// Output file or stdout. Every file starts with the manifest.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw DataFailure("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<std::string> manifest(const std::map<std::string, std::string>& params) {
  std::vector<std::string> lines;
  lines.push_back(std::string("polarnn ") + POLARNN_VERSION);
  lines.push_back("command: " + g_command_line);
  for (const auto& [k, v] : params) lines.push_back(k + ": " + v);
  return lines;
}

void write_manifest(std::ostream& os, const std::map<std::string, std::string>& params) {
  for (const auto& line : manifest(params)) os << "# " << line << '\n';
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct LoadedNet {
  NeuralDecoder net;
  PolarCode code;
};

LoadedNet load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFailure("cannot read weight file '" + path + "'");
  std::vector<std::string> comments;
  NeuralDecoder net = read_weights(in, &comments);
  for (const auto& c : comments) {
    if (c.rfind("code ", 0) != 0) continue;
    PolarCode code = parse_descriptor(c.substr(5));
    if (code.length() != net.input_dim || code.message_size() != net.output_dim)
      throw StructuralError("weight file '" + path + "' does not match its code line");
    return {std::move(net), std::move(code)};
  }
  throw FormatError("weight file '" + path + "' has no '# code' line");
}

void save_weights(const std::string& path, const NeuralDecoder& net, const PolarCode& code,
                  std::map<std::string, std::string> params) {
  Output out(path);
  auto lines = manifest(params);
  lines.push_back("code " + to_descriptor(code));
  write_weights(out.stream(), net, lines);
}

struct CodeArgs {
  int n = 4;
  int k = 11;
  double design_snr = 1.0;

  void add(CLI::App* app) {
    app->add_option("--n", n, "log2 of the code length")->capture_default_str();
    app->add_option("--k", k, "message bits")->capture_default_str();
    app->add_option("--design-snr", design_snr, "construction Eb/N0 in dB")->capture_default_str();
  }
  PolarCode make() const {
    if (k < 0) throw ParameterError("--k must be non-negative");
    return build_polar_code(n, static_cast<std::size_t>(k), design_snr);
  }
  void record(std::map<std::string, std::string>& p, const PolarCode& code) const {
    p["code"] = to_descriptor(code);
  }
};

// ---------------------------------------------------------------------------

struct CodeCmd {
  CodeArgs code;
  std::string out;
  void add(CLI::App& root) {
    auto* app = root.add_subcommand("code", "print the frozen mask of a polar code");
    code.add(app);
    app->add_option("--out", out, "output file (default stdout)");
    app->callback([this] { run(); });
  }
  void run() {
    const auto c = code.make();
    Output o(out);
    o.stream() << to_descriptor(c) << '\n' << c.mask_string() << '\n';
  }
};

struct BuildCmd {
  CodeArgs code;
  double lmax = kDefaultLlrLimit;
  double eps = 1e-3;
  std::size_t leaf_size = 1;
  std::vector<std::string> leaves;
  bool no_merge = false;
  std::string out, log;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("build", "construct a neural decoder and write its weights");
    code.add(app);
    app->add_option("--lmax", lmax, "LLR saturation constant")->capture_default_str();
    app->add_option("--eps", eps, "hard-sign ramp half-width")->capture_default_str();
    app->add_option("--leaf-size", leaf_size, "largest leaf handled by a supplied sub-decoder")
        ->capture_default_str();
    app->add_option("--leaf", leaves, "weight file of a leaf sub-decoder (repeatable)");
    app->add_flag("--no-merge", no_merge, "keep identity glue layers unmerged");
    app->add_option("--out", out, "weight file")->required();
    app->add_option("--log", log, "construction log file");
    app->callback([this] { run(); });
  }

  void run() {
    const auto c = code.make();
    std::vector<LoadedNet> supplied;
    for (const auto& path : leaves) supplied.push_back(load_weights(path));
    LeafPolicy policy;
    policy.max_leaf_size = leaf_size;
    if (!supplied.empty()) {
      policy.provider = [&](const PolarCode& leaf, double bound) -> std::optional<NeuralDecoder> {
        for (const auto& s : supplied) {
          if (!(s.code == leaf)) continue;
          NeuralDecoder net = s.net;
          if (net.l_max < bound)
            throw ConfigError("leaf " + to_descriptor(leaf) + " was built with l_max " +
                              fmt(net.l_max) + " but needs " + fmt(bound));
          return net;
        }
        return std::nullopt;
      };
    }
    BuildOptions opt;
    opt.l_max = lmax;
    opt.eps = eps;
    opt.merge = !no_merge;
    const auto result = build_decoder_report(c, policy, opt);
    std::map<std::string, std::string> p;
    code.record(p, c);
    p["lmax"] = fmt(lmax);
    p["eps"] = fmt(eps);
    p["leaf_size"] = std::to_string(leaf_size);
    p["layers"] = std::to_string(result.net.layers.size());
    save_weights(out, result.net, c, p);
    if (!log.empty()) {
      Output l(log);
      write_manifest(l.stream(), p);
      l.stream() << construction_log(result);
    }
    std::cerr << "built " << to_descriptor(c) << ": " << result.net.layers.size() << " layers ("
              << result.unmerged.layers.size() << " before merging)\n";
  }
};

struct SimulateCmd {
  CodeArgs code;
  std::string decoder = "sc";
  std::string snr = "0:4:0.5";
  std::uint64_t seed = 1;
  std::string weights, variant = "sign_min", out;
  StopRule stop;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("simulate", "Monte-Carlo BER curve");
    code.add(app);
    app->add_option("--decoder", decoder, "sc | ml | nn | comma list")->capture_default_str();
    app->add_option("--snr", snr, "Eb/N0 range start:stop:step (inclusive) or one value")
        ->capture_default_str();
    app->add_option("--seed", seed, "master seed")->capture_default_str();
    app->add_option("--weights", weights, "weight file (nn decoder; also fixes the code)");
    app->add_option("--variant", variant, "f variant for sc")->capture_default_str();
    app->add_option("--min-frames", stop.min_frames)->capture_default_str();
    app->add_option("--min-errors", stop.min_bit_errors)->capture_default_str();
    app->add_option("--max-frames", stop.max_frames, "0 = no cap")->capture_default_str();
    app->add_option("--out", out, "CSV file (default stdout)");
    app->callback([this] { run(); });
  }

  void run() {
    std::optional<LoadedNet> loaded;
    if (!weights.empty()) loaded = load_weights(weights);
    const PolarCode c = loaded ? loaded->code : code.make();
    const auto snrs = parse_snr_range(snr);
    std::vector<DecoderSpec> specs;
    std::stringstream names(decoder);
    for (std::string name; std::getline(names, name, ',');) {
      if (name == "sc") {
        specs.push_back(sc_decoder_spec(c, parse_fvariant(variant)));
      } else if (name == "ml") {
        if (c.message_size() > MlDecoder::kMaxMessageBits)
          throw ParameterError("ml decoder supports K <= 20");
        specs.push_back(ml_decoder_spec(c));
      } else if (name == "nn") {
        if (!loaded) throw ParameterError("--decoder nn needs --weights");
        specs.push_back(nn_decoder_spec(loaded->net));
      } else {
        throw ParameterError("unknown decoder '" + name + "'");
      }
    }
    const auto points = specs.size() == 1 ? run_ber(specs[0], c, snrs, stop, seed)
                                          : compare_decoders(c, specs, snrs, stop, seed);
    std::map<std::string, std::string> p;
    code.record(p, c);
    p["decoder"] = decoder;
    p["snr"] = snr;
    p["seed"] = std::to_string(seed);
    p["variant"] = variant;
    p["stop"] = std::to_string(stop.min_frames) + " frames, " + std::to_string(stop.min_bit_errors) +
                " bit errors, cap " + std::to_string(stop.max_frames);
    if (!weights.empty()) p["weights"] = weights;
    Output o(out);
    write_manifest(o.stream(), p);
    write_ber_csv(o.stream(), points);
  }
};

struct MineCmd {
  std::string weights, out;
  std::size_t want = 1000, budget = 1'000'000;
  double snr = 1.0;
  std::uint64_t seed = 1;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("mine", "collect frames the network gets wrong and ML gets right");
    app->add_option("--weights", weights, "weight file")->required();
    app->add_option("--want", want)->capture_default_str();
    app->add_option("--budget", budget, "frames to draw at most")->capture_default_str();
    app->add_option("--snr", snr, "Eb/N0 in dB")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--out", out, "dataset CSV (default stdout)");
    app->callback([this] { run(); });
  }

  void run() {
    const auto loaded = load_weights(weights);
    const auto r = mine_hard_cases(loaded.code, loaded.net, want,
                                   sigma_from_snr(snr, loaded.code.rate()), seed, budget, loaded.net.l_max);
    std::map<std::string, std::string> p;
    p["weights"] = weights;
    p["snr"] = fmt(snr);
    p["seed"] = std::to_string(seed);
    p["found"] = std::to_string(r.found) + " in " + std::to_string(r.frames_drawn) + " frames";
    p["find_rate"] = fmt(r.find_rate());
    Output o(out);
    write_manifest(o.stream(), p);
    write_dataset_csv(o.stream(), r.data);
    std::cerr << "mined " << r.data.size() << " cases, find rate " << r.find_rate() << '\n';
  }
};

struct TrainCmd {
  std::string weights, out, config_path, history, data_path;
  std::vector<std::string> overrides;
  std::size_t random = 200000, mined = 1000, holdout = 100000, budget = 1'000'000;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("train", "fine-tune a weight file");
    app->add_option("--weights", weights, "input weight file")->required();
    app->add_option("--out", out, "output weight file")->required();
    app->add_option("--config", config_path, "key=value config file");
    app->add_option("--set", overrides, "config override key=value (repeatable)");
    app->add_option("--history", history, "history CSV (default stdout)");
    app->add_option("--data", data_path, "dataset CSV to use instead of generating one");
    app->add_option("--random", random, "random frames to generate")->capture_default_str();
    app->add_option("--mined", mined, "hard cases to mine")->capture_default_str();
    app->add_option("--budget", budget, "mining frame budget")->capture_default_str();
    app->add_option("--holdout", holdout, "holdout frames")->capture_default_str();
    app->callback([this] { run(); });
  }

  void run() {
    TrainConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw DataFailure("cannot read config '" + config_path + "'");
      cfg = TrainConfig::parse(in);
    }
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ParameterError("--set expects key=value");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();

    const auto loaded = load_weights(weights);
    const PolarCode& code = loaded.code;
    const double sigma = sigma_from_snr(cfg.snr_db, code.rate());
    const double l_max = loaded.net.l_max;
    Dataset data;
    if (!data_path.empty()) {
      std::ifstream in(data_path);
      if (!in) throw DataFailure("cannot read dataset '" + data_path + "'");
      data = read_dataset_csv(in);
    } else {
      data = gen_dataset(code, sigma, random, cfg.seed, l_max);
      if (mined > 0)
        data.append(mine_hard_cases(code, loaded.net, mined, sigma, cfg.seed + 1, budget, l_max).data);
    }
    const Dataset hold = gen_dataset(code, sigma, holdout, cfg.seed + 2, l_max);
    const auto result = train(loaded.net, data, cfg, holdout ? &hold : nullptr);

    std::map<std::string, std::string> p;
    p["weights"] = weights;
    p["config"] = cfg.to_string();
    p["dataset"] = std::to_string(data.count(Provenance::Random)) + " random, " +
                   std::to_string(data.count(Provenance::Mined)) + " mined";
    p["holdout"] = std::to_string(holdout);
    if (holdout) p["holdout_ber_before"] = fmt(dataset_ber(loaded.net, hold));
    save_weights(out, result.net, code, p);
    Output h(history);
    write_manifest(h.stream(), p);
    write_history_csv(h.stream(), result.history);
  }
};

struct BenchCmd {
  std::size_t batch = 1 << 16, reps = 50;
  std::uint64_t seed = 1;
  std::string out;
  void add(CLI::App& root) {
    auto* app = root.add_subcommand("bench", "time the f-function variants");
    app->add_option("--batch", batch)->capture_default_str();
    app->add_option("--reps", reps)->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--out", out, "CSV file (default stdout)");
    app->callback([this] { run(); });
  }
  void run() {
    const auto report = bench_f_variants(batch, reps, seed);
    std::map<std::string, std::string> p;
    p["batch"] = std::to_string(batch);
    p["reps"] = std::to_string(reps);
    p["workers"] = std::to_string(configure_workers());
    Output o(out);
    write_manifest(o.stream(), p);
    write_bench_csv(o.stream(), report);
  }
};

struct VerifyCmd {
  std::string weights;
  std::size_t frames = 10000;
  double snr = 1.0;
  double max_rate = 1e-4;
  std::uint64_t seed = 1;
  void add(CLI::App& root) {
    auto* app = root.add_subcommand("verify", "check a weight file against SC decoding");
    app->add_option("--weights", weights, "weight file")->required();
    app->add_option("--frames", frames)->capture_default_str();
    app->add_option("--snr", snr, "Eb/N0 in dB")->capture_default_str();
    app->add_option("--max-rate", max_rate, "largest acceptable bit disagreement rate")
        ->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->callback([this] { run(); });
  }
  void run() {
    const auto loaded = load_weights(weights);
    const auto rep = check_equivalence(loaded.code, loaded.net, snr, frames, seed);
    std::printf("frames=%zu bits=%zu differing_bits=%zu differing_frames=%zu guarded_frames=%zu "
                "unexplained_frames=%zu disagreement_rate=%.6g\n",
                rep.frames, rep.bits, rep.differing_bits, rep.differing_frames, rep.guarded_frames,
                rep.unexplained_frames, rep.disagreement_rate());
    if (rep.disagreement_rate() > max_rate)
      throw DataFailure("disagreement rate " + fmt(rep.disagreement_rate()) + " exceeds " + fmt(max_rate));
  }
};

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) g_command_line += std::string(i > 1 ? " " : "") + argv[i];
  configure_workers();

  CLI::App app{"polar-code neural decoder workbench"};
  app.set_version_flag("--version", std::string(POLARNN_VERSION));
  app.require_subcommand(1);
  CodeCmd code;
  BuildCmd build;
  SimulateCmd simulate;
  TrainCmd train_cmd;
  MineCmd mine;
  BenchCmd bench;
  VerifyCmd verify;
  code.add(app);
  build.add(app);
  simulate.add(app);
  train_cmd.add(app);
  mine.add(app);
  bench.add(app);
  verify.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
