#include "rainlab/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rainlab/analysis.hpp"
#include "rainlab/checkpoint.hpp"
#include "rainlab/errors.hpp"
#include "rainlab/gradcheck.hpp"
#include "rainlab/image.hpp"
#include "rainlab/metrics.hpp"
#include "rainlab/synth.hpp"
#include "rainlab/trainer.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace rainlab {

namespace {

void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::vector<uint8_t>(text.begin(), text.end()));
}

// Tracks every option of a subcommand so values can come from three layers:
// command-line flags, then a --config JSON file, then built-in defaults.
// Required options are enforced after the merge, which lets a config file
// satisfy them; the effective values are echoed verbatim next to the outputs.
class Conf {
 public:
  void attach(CLI::App* cmd, std::string name) {
    cmd_ = cmd;
    name_ = std::move(name);
    cmd_->add_option("--config", config_path_, "JSON file supplying values for unset options");
  }

  template <typename T>
  void bind(const std::string& flag, T& var, const std::string& help, bool required = false) {
    Bound b;
    b.key = flag.substr(2);
    b.opt = cmd_->add_option(flag, var, help);
    b.required = required;
    b.set_from = [&var](const njson& j) { var = j.get<T>(); };
    b.get = [&var] { return ojson(var); };
    if constexpr (std::is_same_v<T, std::string>)
      b.is_empty = [&var] { return var.empty(); };
    else
      b.is_empty = [] { return false; };
    bound_.push_back(std::move(b));
  }

  // config-file merge + required check; call once the command is selected
  void finalize() {
    if (!config_path_.empty()) {
      njson cfg;
      try {
        std::vector<uint8_t> raw = read_file(config_path_);
        cfg = njson::parse(raw.begin(), raw.end());
      } catch (const std::exception& e) {
        throw ParamError(std::string("config: ") + e.what());
      }
      if (!cfg.is_object()) throw ParamError("config: expected a JSON object");
      for (const auto& [key, val] : cfg.items()) {
        const Bound* match = nullptr;
        for (const auto& b : bound_)
          if (b.key == key) match = &b;
        if (!match) throw ParamError("config: unknown key \"" + key + "\"");
        if (match->opt->count() == 0) {
          try {
            match->set_from(val);
          } catch (const std::exception&) {
            throw ParamError("config: bad value for \"" + key + "\"");
          }
        }
      }
    }
    for (const auto& b : bound_)
      if (b.required && b.is_empty()) throw ParamError("missing required --" + b.key);
  }

  void echo_to(const std::string& dir) const {
    ojson o;
    for (const auto& b : bound_) o[b.key] = b.get();
    fs::create_directories(dir.empty() ? "." : dir);
    fs::path p = fs::path(dir.empty() ? "." : dir) / ("config_echo." + name_ + ".json");
    write_text(p.string(), o.dump(2) + "\n");
  }

 private:
  struct Bound {
    std::string key;
    CLI::Option* opt = nullptr;
    bool required = false;
    std::function<void(const njson&)> set_from;
    std::function<ojson()> get;
    std::function<bool()> is_empty;
  };
  CLI::App* cmd_ = nullptr;
  std::string name_, config_path_;
  std::vector<Bound> bound_;
};

std::string parent_dir(const std::string& file_path) {
  fs::path p = fs::path(file_path).parent_path();
  return p.empty() ? std::string(".") : p.string();
}

int count_ppm_sources(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("enrich: not a directory: " + dir);
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".ppm") ++n;
  return n;
}

struct SynthCmd {
  Conf conf;
  std::string out;
  int n = 20, size = 32;
  uint64_t seed = 0;
  double heavy_threshold = 8.0;

  void setup(CLI::App& app) {
    CLI::App* c = app.add_subcommand("synth", "generate a rainy/clean training set from seeded textures");
    conf.attach(c, "synth");
    conf.bind("--out", out, "output directory", true);
    conf.bind("--n", n, "number of image pairs");
    conf.bind("--size", size, "square image size in pixels");
    conf.bind("--seed", seed, "master seed");
    conf.bind("--heavy-threshold", heavy_threshold, "summed streak density that marks an image heavy");
  }
  int run() {
    conf.finalize();
    if (n < 0) throw ParamError("synth: --n must be >= 0");
    if (size < 8) throw ParamError("synth: --size must be at least 8");
    DatasetManifest m = build_dataset("", n, size, seed, out, EnrichmentPolicy{}, heavy_threshold);
    conf.echo_to(out);
    int heavy = 0;
    for (const auto& e : m.entries) heavy += e.heavy ? 1 : 0;
    std::cout << "synth: wrote " << m.entries.size() << " pairs (" << heavy << " heavy) to " << out
              << "\n";
    return 0;
  }
};

struct EnrichCmd {
  Conf conf;
  std::string in, out;
  int n = 0, size = 0;
  uint64_t seed = 0;
  double heavy_threshold = 8.0;

  void setup(CLI::App& app) {
    CLI::App* c = app.add_subcommand("enrich", "overlay streak families on existing clean images");
    conf.attach(c, "enrich");
    conf.bind("--in", in, "directory of clean .ppm images", true);
    conf.bind("--out", out, "output directory", true);
    conf.bind("--n", n, "pairs to produce (0 = one per source image)");
    conf.bind("--size", size, "resize sources to this square size (0 = keep)");
    conf.bind("--seed", seed, "master seed");
    conf.bind("--heavy-threshold", heavy_threshold, "summed streak density that marks an image heavy");
  }
  int run() {
    conf.finalize();
    int count = n > 0 ? n : count_ppm_sources(in);
    if (count <= 0) throw DataError("enrich: no .ppm sources in " + in);
    DatasetManifest m = build_dataset(in, count, size, seed, out, EnrichmentPolicy{}, heavy_threshold);
    conf.echo_to(out);
    int heavy = 0;
    for (const auto& e : m.entries) heavy += e.heavy ? 1 : 0;
    std::cout << "enrich: wrote " << m.entries.size() << " pairs (" << heavy << " heavy) to "
              << out << "\n";
    return 0;
  }
};

struct TrainCmd {
  Conf conf;
  std::string manifest, out, resume;
  int rounds = 1, cycles = 5, batch = 4;
  double lr_gan = 1e-3, lr_cnn = 1e-4, lambda = 100.0;
  int radius = FilterParams{}.radius;
  double eps = FilterParams{}.eps;
  uint64_t seed = 0;

  void setup(CLI::App& app) {
    CLI::App* c = app.add_subcommand("train", "run the alternating two-objective schedule");
    conf.attach(c, "train");
    conf.bind("--manifest", manifest, "dataset manifest (.jsonl)", true);
    conf.bind("--out", out, "output directory", true);
    conf.bind("--rounds", rounds, "training rounds");
    conf.bind("--cycles", cycles, "adversarial cycles per round");
    conf.bind("--batch", batch, "batch size");
    conf.bind("--lr-gan", lr_gan, "adversarial branch learning rate");
    conf.bind("--lr-cnn", lr_cnn, "pixel branch learning rate");
    conf.bind("--lambda", lambda, "adversarial weight inside the perceptual loss");
    conf.bind("--radius", radius, "smoothing radius of the layer decomposition");
    conf.bind("--eps", eps, "edge threshold of the layer decomposition");
    conf.bind("--seed", seed, "master seed");
    conf.bind("--resume", resume, "checkpoint to continue from");
  }
  int run() {
    conf.finalize();
    TrainConfig cfg;
    cfg.lr_gan = lr_gan;
    cfg.lr_cnn = lr_cnn;
    cfg.batch = batch;
    cfg.cycles = cycles;
    cfg.rounds = rounds;
    cfg.lambda = lambda;
    cfg.filter = FilterParams{radius, eps};
    cfg.seed = seed;
    cfg.validate();

    DatasetManifest man = load_manifest(manifest);
    TrainSet data = TrainSet::load(man, parent_dir(manifest), cfg.filter);
    Trainer trainer = resume.empty() ? Trainer::init(cfg)
                                     : Trainer::resume(cfg, read_checkpoint_file(resume));
    std::vector<LossRecord> log = trainer.train(data);

    fs::create_directories(out);
    write_checkpoint_file((fs::path(out) / "checkpoint.bin").string(), trainer.to_checkpoint());
    write_text((fs::path(out) / "losses.jsonl").string(), log_to_jsonl(log));
    conf.echo_to(out);
    double last_mse = 0.0;
    for (const auto& r : log)
      if (r.mse) last_mse = *r.mse;
    std::cout << "train: " << trainer.round() << " rounds done, " << log.size()
              << " updates logged, last mse " << last_mse << ", checkpoint in " << out << "\n";
    return 0;
  }
};

struct DerainCmd {
  Conf conf;
  std::string in, ckpt, out;

  void setup(CLI::App& app) {
    CLI::App* c = app.add_subcommand("derain", "remove streaks from one image with a trained checkpoint");
    conf.attach(c, "derain");
    conf.bind("--in", in, "rainy input .ppm", true);
    conf.bind("--ckpt", ckpt, "checkpoint file", true);
    conf.bind("--out", out, "restored output .ppm", true);
  }
  int run() {
    conf.finalize();
    Image rainy = load_ppm(in);
    Checkpoint c = read_checkpoint_file(ckpt);
    Image restored = derain_image(rainy, c);
    fs::create_directories(parent_dir(out));
    save_ppm(out, restored);
    conf.echo_to(parent_dir(out));
    std::cout << "derain: wrote " << out << "\n";
    return 0;
  }
};

struct EvalCmd {
  Conf conf;
  std::string manifest, derained, report;

  void setup(CLI::App& app) {
    CLI::App* c = app.add_subcommand("eval", "score derained images against their clean references");
    conf.attach(c, "eval");
    conf.bind("--manifest", manifest, "dataset manifest (.jsonl)", true);
    conf.bind("--derained", derained, "directory of restored images", true);
    conf.bind("--report", report, "metrics report path (.json)", true);
  }
  int run() {
    conf.finalize();
    DatasetManifest man = load_manifest(manifest);
    MetricsReport rep = evaluate_dataset(man, parent_dir(manifest), derained);
    fs::create_directories(parent_dir(report));
    save_report(report, rep);
    conf.echo_to(parent_dir(report));
    std::cout << "eval: " << rep.count << " images, mean psnr " << rep.mean_psnr << ", mean ssim "
              << rep.mean_ssim << ", mean uqi " << rep.mean_uqi << "\n";
    return 0;
  }
};

struct AnalyzeCmd {
  Conf conf;
  std::string report;
  uint64_t seed = 0;
  int restarts = 64, max_steps = 5000, schedule_steps = 100;

  void setup(CLI::App& app) {
    CLI::App* c = app.add_subcommand(
        "analyze", "search the toy objective for points where the two losses cancel");
    conf.attach(c, "analyze");
    conf.bind("--report", report, "analysis report path (.json)", true);
    conf.bind("--seed", seed, "master seed");
    conf.bind("--restarts", restarts, "search restarts");
    conf.bind("--max-steps", max_steps, "search steps per restart");
    conf.bind("--schedule-steps", schedule_steps, "steps to simulate each schedule for");
  }

  static ojson classify_json(const ClassifyResult& c) {
    return ojson{{"class", to_string(c.cls)},
                 {"jacobian_all", c.jac_all},
                 {"jacobian_heavy", c.jac_heavy},
                 {"residual_all", c.resid_all},
                 {"residual_heavy", c.resid_heavy}};
  }

  static ojson trace_json(const ScheduleResult& r) {
    ojson steps = ojson::array();
    int n = static_cast<int>(r.trace.size());
    int stride = std::max(1, n / 10);
    for (int i = 0; i < n; i += stride) {
      const ScheduleStep& s = r.trace[i];
      steps.push_back(ojson{{"step", i + 1},
                            {"content", s.content},
                            {"mse", s.mse},
                            {"joint", s.joint},
                            {"delta", s.delta_from_start}});
    }
    if (n > 0 && (n - 1) % stride != 0) {
      const ScheduleStep& s = r.trace[n - 1];
      steps.push_back(ojson{{"step", n},
                            {"content", s.content},
                            {"mse", s.mse},
                            {"joint", s.joint},
                            {"delta", s.delta_from_start}});
    }
    return ojson{{"trace", steps},
                 {"final_delta", r.trace.empty() ? 0.0 : r.trace.back().delta_from_start},
                 {"final_class", classify_json(r.final_class)}};
  }

  int run() {
    conf.finalize();
    if (restarts <= 0 || max_steps <= 0 || schedule_steps < 0)
      throw ParamError("analyze: budgets must be positive");
    ToyInstance inst = build_toy_instance(seed);

    ojson rep;
    rep["seed"] = seed;
    rep["planted"] = classify_json(classify_solution(inst, inst.theta_star));
    rep["planted_schedules"] = ojson{
        {"alternating",
         trace_json(run_schedule(inst, ScheduleKind::Alternating, inst.theta_star, schedule_steps))},
        {"joint", trace_json(run_schedule(inst, ScheduleKind::Joint, inst.theta_star, schedule_steps))}};

    InterferencePoint ip = find_interference_stationary(inst, seed, {restarts, max_steps});
    ojson ij;
    ij["found"] = ip.found;
    if (ip.found) {
      ij["restart_index"] = ip.restart_index;
      ij["joint_grad_norm"] = ip.joint_grad_norm;
      ij["content_grad_norm"] = ip.content_grad_norm;
      ij["mse_grad_norm"] = ip.mse_grad_norm;
      ij["theta"] = ip.theta;
      ij["classification"] = classify_json(classify_solution(inst, ip.theta));
      rep["schedules_from_interference"] = ojson{
          {"alternating",
           trace_json(run_schedule(inst, ScheduleKind::Alternating, ip.theta, schedule_steps))},
          {"joint", trace_json(run_schedule(inst, ScheduleKind::Joint, ip.theta, schedule_steps))}};
    }
    rep["interference"] = ij;

    fs::create_directories(parent_dir(report));
    write_text(report, rep.dump(2) + "\n");
    conf.echo_to(parent_dir(report));
    if (ip.found)
      std::cout << "analyze: interference point certified (joint " << ip.joint_grad_norm
                << ", content " << ip.content_grad_norm << ", mse " << ip.mse_grad_norm << ")\n";
    else
      std::cout << "analyze: no certified interference point within budget\n";
    return 0;
  }
};

struct GradcheckCmd {
  Conf conf;
  double tol = 1e-4;

  void setup(CLI::App& app) {
    CLI::App* c = app.add_subcommand("gradcheck", "finite-difference validation of every layer and loss");
    conf.attach(c, "gradcheck");
    conf.bind("--tol", tol, "relative tolerance");
  }
  int run() {
    conf.finalize();
    if (tol <= 0.0) throw ParamError("gradcheck: --tol must be positive");
    std::vector<SuiteCase> cases = gradient_suite(tol);
    for (const auto& c : cases)
      std::cout << (c.report.pass ? "ok   " : "FAIL ") << c.name << "  max_rel "
                << c.report.max_rel_error << "  (" << c.report.checked << " coords)\n";
    if (!suite_passed(cases)) {
      std::cerr << "gradcheck: failures at tol " << tol << "\n";
      return 1;
    }
    std::cout << "gradcheck: all " << cases.size() << " cases pass at tol " << tol << "\n";
    return 0;
  }
};

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"rain streak synthesis, removal and training analysis"};
  app.name("rainlab");
  app.require_subcommand(1);

  SynthCmd synth;
  EnrichCmd enrich;
  TrainCmd train;
  DerainCmd derain;
  EvalCmd eval;
  AnalyzeCmd analyze;
  GradcheckCmd gradcheck;
  synth.setup(app);
  enrich.setup(app);
  train.setup(app);
  derain.setup(app);
  eval.setup(app);
  analyze.setup(app);
  gradcheck.setup(app);

  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("rainlab");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("synth")) return synth.run();
    if (app.got_subcommand("enrich")) return enrich.run();
    if (app.got_subcommand("train")) return train.run();
    if (app.got_subcommand("derain")) return derain.run();
    if (app.got_subcommand("eval")) return eval.run();
    if (app.got_subcommand("analyze")) return analyze.run();
    if (app.got_subcommand("gradcheck")) return gradcheck.run();
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace rainlab
