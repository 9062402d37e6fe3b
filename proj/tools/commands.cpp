#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "checkpoint.hpp"
#include "figures.hpp"
#include "prdad/classical.hpp"
#include "prdad/errors.hpp"
#include "prdad/kernels.hpp"
#include "prdad/metrics.hpp"

#ifndef PRDAD_VERSION
#define PRDAD_VERSION "0.0.0"
#endif
#ifndef PRDAD_GIT_REV
#define PRDAD_GIT_REV "unknown"
#endif

namespace prdad::cli {
namespace fs = std::filesystem;

namespace {

std::string precision_name(Precision p) { return p == Precision::Float ? "float" : "double"; }

template <typename T>
constexpr Precision precision_of() {
  return sizeof(T) == 4 ? Precision::Float : Precision::Double;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::ofstream open_log(const fs::path& path, bool append, const std::string& header) {
  const bool fresh = !append || !fs::exists(path);
  std::ofstream out(path, fresh ? std::ios::trunc : std::ios::app);
  if (!out) throw IoError("cannot write " + path.string());
  if (fresh) out << header << "\n";
  return out;
}

/// Creates the run directory and makes it self-describing.
void prepare_run_dir(const ExperimentConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec || !fs::is_directory(c.out))
    throw IoError("cannot create output directory " + c.out.string());
  write_text(c.out / kConfigFile, to_text(c));
  write_text(c.out / kVersionFile,
             std::string("prdad ") + PRDAD_VERSION + " (" + PRDAD_GIT_REV + ")\n");
}

/// The config text stored in checkpoints leaves out the output directory
/// so that identical runs in different places produce identical files.
std::string portable_text(ExperimentConfig c) {
  c.out.clear();
  return to_text(c);
}

Checkpoint base_checkpoint(const ExperimentConfig& c, const std::string& kind, Stage stage,
                           std::size_t epochs_done, std::uint64_t step) {
  Checkpoint ck;
  ck.manifest["kind"] = kind;
  ck.manifest["precision"] = precision_name(c.precision);
  ck.manifest["config_hash"] = config_hash(c, stage);
  ck.manifest["config"] = portable_text(c);
  ck.manifest["epochs_done"] = epochs_done;
  ck.manifest["step"] = step;
  return ck;
}

void expect_kind(const Checkpoint& ck, const std::string& kind, const fs::path& path) {
  const auto got = ck.manifest.value("kind", std::string("?"));
  if (got != kind)
    throw ConfigError(path.string() + " is a " + got + " checkpoint, expected " + kind);
}

/// Resuming requires the stage-relevant part of the config to be unchanged.
void expect_hash(const Checkpoint& ck, const ExperimentConfig& c, Stage stage,
                 const fs::path& path) {
  const auto stored = ck.manifest.at("config_hash").get<std::uint64_t>();
  if (stored != config_hash(c, stage))
    throw ConfigError("config hash mismatch: " + path.string() +
                      " was written with a different model, data or optimizer setup");
}

data::Dataset load_data(const ExperimentConfig& c, bool need_train, bool need_test) {
  auto src = c.source;
  // The loader always reads both splits; a cap of one image keeps the unused
  // one cheap.
  if (!need_train) src.train_limit = 1;
  if (!need_test) src.test_limit = 1;
  return data::load_dataset(src, c.spec);
}

// train-ae ------------------------------------------------------------------

template <typename T>
void write_ae_report(const ExperimentConfig& c, const autoencoder::Autoencoder<T>& ae,
                     const Tensor& test) {
  const Tensor target = data::normalize(test, c.spec.mu, c.spec.sigma);
  const auto rec = autoencoder::reconstruct(ae, test, c.spec);
  const auto repr = autoencoder::encode(ae.encoder, test, c.spec);
  const std::size_t N = target.dim(0), P = target.size() / N;
  std::vector<double> mean(P, 0.0);
  for (std::size_t i = 0; i < target.size(); ++i) mean[i % P] += target[i] / double(N);
  double err = 0, base = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    err += (double(rec[i]) - target[i]) * (double(rec[i]) - target[i]);
    base += (mean[i % P] - target[i]) * (mean[i % P] - target[i]);
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "test_images,mse,mean_image_mse,ratio,active_fraction\n%zu,%.9g,%.9g,%.9g,%.9g\n",
                N, err / double(target.size()), base / double(target.size()), base / err,
                autoencoder::active_fraction(repr));
  write_text(c.out / "ae_report.csv", buf);
  std::cout << buf;
}

template <typename T>
void train_ae(const ExperimentConfig& c, const Options& opt) {
  prepare_run_dir(c);
  const auto ds = load_data(c, true, true);
  autoencoder::Autoencoder<T> ae(c.model.encoder, c.seed);
  optim::Adam<T> adam(ae.parameters(), c.ae.adam);
  std::size_t first = 0;
  if (opt.checkpoint) {
    const auto ck = load(*opt.checkpoint);
    expect_kind(ck, "autoencoder", *opt.checkpoint);
    expect_hash(ck, c, Stage::Autoencoder, *opt.checkpoint);
    get_autoencoder(ck, ae);
    get_adam(ck, adam);
    first = ck.manifest.at("epochs_done").get<std::size_t>();
    std::cout << "resuming after epoch " << first << ", step " << adam.steps() << "\n";
  }
  std::cout << "autoencoder parameters: " << ae.parameter_count() << "\n";

  auto log = open_log(c.out / kAeLog, first > 0, "epoch,step,loss,mse,l1,active");
  auto timing = open_log(c.out / kTimingLog, first > 0, "stage,epoch,seconds");
  const fs::path ckpt = c.out / kAeCheckpoint;
  std::size_t done = first;
  auto on_epoch = [&](const autoencoder::EpochLog& e) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%zu,%llu,%.9g,%.9g,%.9g,%.9g", e.epoch,
                  static_cast<unsigned long long>(e.step), e.loss, e.mse, e.l1, e.active);
    log << buf << std::endl;
    timing << "autoencoder," << e.epoch << "," << e.seconds << std::endl;
    std::cout << buf << "  (" << e.seconds << " s)" << std::endl;
    done = e.epoch + 1;
    auto ck = base_checkpoint(c, "autoencoder", Stage::Autoencoder, done, e.step);
    put_autoencoder(ck, ae);
    put_adam(ck, adam);
    save(ckpt, ck);
  };
  try {
    autoencoder::train_autoencoder(ae, ds.train, c.spec, c.ae, adam, on_epoch, first);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) + "; last good checkpoint: " +
                          (done > 0 ? ckpt.string() + " after epoch " + std::to_string(done)
                                    : std::string("none")));
  }
  if (first >= c.ae.epochs && !fs::exists(ckpt)) {
    auto ck = base_checkpoint(c, "autoencoder", Stage::Autoencoder, first, adam.steps());
    put_autoencoder(ck, ae);
    put_adam(ck, adam);
    save(ckpt, ck);
  }
  write_ae_report(c, ae, ds.test);
}

// train-prdad ---------------------------------------------------------------

/// The network described by `c`; a trained decoder is read from the
/// configured autoencoder checkpoint when `load_ae` is set.
template <typename T>
model::PRDAD<T> build_network(const ExperimentConfig& c, bool load_ae) {
  std::unique_ptr<autoencoder::Autoencoder<T>> ae;
  if (c.model.decoder == model::DecoderKind::Trained) {
    ae = std::make_unique<autoencoder::Autoencoder<T>>(c.model.encoder, c.seed);
    if (load_ae) {
      if (c.autoencoder_checkpoint.empty())
        throw ConfigError("model.decoder = trained needs model.autoencoder = <checkpoint>");
      const auto ck = load(c.autoencoder_checkpoint);
      expect_kind(ck, "autoencoder", c.autoencoder_checkpoint);
      get_autoencoder(ck, *ae);
    }
  }
  return model::PRDAD<T>(c.model, c.seed, std::move(ae));
}

template <typename T>
void train_prdad(const ExperimentConfig& c, const Options& opt) {
  prepare_run_dir(c);
  const auto ds = load_data(c, true, false);
  std::optional<Checkpoint> resume;
  if (opt.checkpoint) {
    resume = load(*opt.checkpoint);
    expect_kind(*resume, "prdad", *opt.checkpoint);
    expect_hash(*resume, c, Stage::PRDAD, *opt.checkpoint);
  }
  auto net = build_network<T>(c, !resume);
  optim::Adam<T> adam(net.parameters(), c.train.adam);
  std::size_t first = 0;
  if (resume) {
    get_prdad(*resume, net);
    get_adam(*resume, adam);
    first = resume->manifest.at("epochs_done").get<std::size_t>();
    std::cout << "resuming after epoch " << first << ", step " << adam.steps() << "\n";
  }
  std::cout << "PR-DAD parameters: " << net.parameter_count() << "\n";

  auto log = open_log(c.out / kTrainLog, first > 0, training::log_header());
  auto timing = open_log(c.out / kTimingLog, first > 0, "stage,epoch,seconds");
  const fs::path ckpt = c.out / kPrdadCheckpoint;
  std::size_t saved = first;
  training::TrainHooks<T> hooks;
  hooks.on_epoch = [&](const training::EpochLog& e) {
    log << training::log_row(e) << std::endl;
    timing << "prdad," << e.epoch << "," << e.seconds << std::endl;
    std::cout << training::log_row(e) << "  (" << e.seconds << " s)" << std::endl;
  };
  hooks.on_checkpoint = [&](std::size_t done) {
    auto ck = base_checkpoint(c, "prdad", Stage::PRDAD, done, adam.steps());
    put_prdad(ck, net);
    put_adam(ck, adam);
    save(ckpt, ck);
    saved = done;
  };
  auto cfg = c.train;
  cfg.clamp_val = c.eval.clamp;
  try {
    training::train_prdad(net, ds.train, c.spec, cfg, adam, hooks, first);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) + "; last good checkpoint: " +
                          (saved > 0 ? ckpt.string() + " after epoch " + std::to_string(saved)
                                     : std::string("none")));
  }
  if (first >= cfg.epochs) hooks.on_checkpoint(first);
}

// eval and baseline ---------------------------------------------------------

void save_samples(const fs::path& dir, const std::vector<Tensor>& originals,
                  const std::vector<Tensor>& recovered, const metrics::EvalReport& rep,
                  std::size_t count) {
  count = std::min(count, originals.size());
  if (count == 0) return;
  std::vector<Tensor> top(originals.begin(), originals.begin() + count), bottom;
  // Reconstructions are shown in the orientation they were scored in.
  for (std::size_t i = 0; i < count; ++i)
    bottom.push_back(rep.images[i].rotated ? ad::rotate_pi(recovered[i]) : recovered[i]);
  const std::size_t n = top[0].dim(0);
  Tensor a({count, n, n}), b({count, n, n});
  for (std::size_t i = 0; i < count; ++i) {
    std::copy(top[i].data(), top[i].data() + n * n, a.data() + i * n * n);
    std::copy(bottom[i].data(), bottom[i].data() + n * n, b.data() + i * n * n);
  }
  Checkpoint ck;
  ck.manifest["kind"] = "samples";
  put_tensor(ck, "original", a);
  put_tensor(ck, "recovered", b);
  save(dir / "samples.ckpt", ck);
  data::write_pgm(dir / "grid.pgm", pair_grid(top, bottom));
}

void write_report(const fs::path& dir, metrics::EvalReport& rep) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  {
    std::ofstream out(dir / "scores.csv");
    if (!out) throw IoError("cannot write " + (dir / "scores.csv").string());
    rep.write_csv(out);
  }
  {
    std::ofstream out(dir / "summary.csv");
    metrics::write_summary_csv(out, {rep});
  }
  const std::string table = metrics::format_table({rep});
  write_text(dir / "table.txt", table);
  std::cout << table;
}

template <typename T>
void eval_model(const ExperimentConfig& c, const Options& opt,
                const std::optional<Checkpoint>& ck) {
  prepare_run_dir(c);
  const auto ds = load_data(c, false, true);
  std::vector<Tensor> targets, predictions;
  for (std::size_t i = 0; i < ds.test.dim(0); ++i)
    targets.push_back(data::gather(ds.test, {i}).reshaped({ds.test.dim(1), ds.test.dim(2)}));

  std::string label = c.name;
  if (c.eval.oracle) {
    predictions = targets;
    label += " (oracle)";
  } else {
    expect_kind(*ck, "prdad", *opt.checkpoint);
    // The checkpoint describes its own network.
    auto stored = parse_config(ck->manifest.at("config").get<std::string>());
    if (stored.precision != precision_of<T>())
      throw FormatError("checkpoint precision differs from the requested precision");
    auto net = build_network<T>(stored, false);
    get_prdad(*ck, net);
    if (stored.spec != c.spec)
      std::cerr << "warning: evaluating with a different preprocessing spec than training\n";
    predictions = training::predict(net, ds.test, c.spec, c.eval.batch, c.eval.clamp);
  }
  auto rep = metrics::score(predictions, targets, c.eval.orientation_resolve, c.eval.peak);
  rep.model = label;
  const fs::path dir = c.out / "eval";
  write_report(dir, rep);
  save_samples(dir, targets, predictions, rep, c.eval.grid);
}

void baseline(const ExperimentConfig& c) {
  prepare_run_dir(c);
  auto ds = load_data(c, false, true);
  std::size_t N = ds.test.dim(0);
  if (c.baseline.count) N = std::min(N, c.baseline.count);
  const std::size_t n = ds.test.dim(1);
  const auto pad = c.model.padding;
  classical::Constraints cons;
  cons.nonneg = c.baseline.nonneg;
  if (c.baseline.support) cons.support = classical::support_mask(n, pad);
  const bool er = c.baseline.method == BaselineSettings::Method::ErrorReduction;

  std::vector<Tensor> targets(N), predictions(N);
  std::vector<std::vector<double>> residuals(N);
  // Every image is independent and seeded by its index, so the result does
  // not depend on the thread count.
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < N; ++i) {
    Tensor x = data::gather(ds.test, {i}).reshaped({n, n});
    const Tensor omega = fourier::forward_model(x, pad);
    const Tensor x0 = classical::random_phase_init(omega, data::sample_seed(c.seed, 0, i));
    auto st = er ? classical::error_reduction(omega, x0, c.baseline.iterations, cons)
                 : classical::hio(omega, x0, c.baseline.beta, c.baseline.iterations, cons);
    Tensor rec = fourier::crop(st.image(), n, pad);
    if (c.eval.clamp)
      for (auto& v : rec.span()) v = std::clamp(v, 0.0, 1.0);
    targets[i] = std::move(x);
    predictions[i] = std::move(rec);
    residuals[i] = std::move(st.residuals);
  }

  auto rep = metrics::score(predictions, targets, c.eval.orientation_resolve, c.eval.peak);
  rep.model = er ? "error reduction" : "HIO";
  const fs::path dir = c.out / "baseline";
  write_report(dir, rep);
  save_samples(dir, targets, predictions, rep, c.eval.grid);

  std::ofstream res(dir / "residuals.csv");
  res << "iteration,mean_residual,increases\n";
  const std::size_t iters = N ? residuals[0].size() : 0;
  for (std::size_t k = 0; k < iters; ++k) {
    double mean = 0;
    std::size_t up = 0;
    for (std::size_t i = 0; i < N; ++i) {
      mean += residuals[i][k] / double(N);
      up += k > 0 && residuals[i][k] > residuals[i][k - 1];
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%zu\n", k + 1, mean, up);
    res << buf;
  }
}

// export-figures ------------------------------------------------------------

void export_figures(const fs::path& run) {
  if (!fs::is_directory(run)) throw IoError("no run directory " + run.string());
  const fs::path dir = run / "figures";
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::size_t written = 0;
  auto plot_log = [&](const fs::path& file, const std::vector<std::string>& skip) {
    if (!fs::exists(file)) return;
    for (const auto& [name, ys] : read_csv_columns(file)) {
      if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
      data::write_pgm(dir / (file.stem().string() + "_" + name + ".pgm"), line_plot(ys));
      ++written;
    }
  };
  plot_log(run / kAeLog, {"epoch", "step"});
  plot_log(run / kTrainLog, {"epoch", "step", "decoder_finetune"});
  plot_log(run / "baseline" / "residuals.csv", {"iteration", "increases"});
  for (const char* sub : {"eval", "baseline"}) {
    const fs::path samples = run / sub / "samples.ckpt";
    if (!fs::exists(samples)) continue;
    const auto ck = load(samples);
    const Blob* a = ck.find("original");
    if (!a) throw FormatError(samples.string() + " has no original images");
    Tensor orig(a->shape), rec(a->shape);
    get_tensor(ck, "original", orig);
    get_tensor(ck, "recovered", rec);
    std::vector<Tensor> top, bottom;
    const std::size_t n = orig.dim(1);
    for (std::size_t i = 0; i < orig.dim(0); ++i) {
      top.push_back(data::gather(orig, {i}).reshaped({n, n}));
      bottom.push_back(data::gather(rec, {i}).reshaped({n, n}));
    }
    data::write_pgm(dir / (std::string(sub) + "_grid.pgm"), pair_grid(top, bottom));
    ++written;
  }
  if (written == 0) throw IoError("nothing to export in " + run.string());
  std::cout << "wrote " << written << " figures to " << dir.string() << "\n";
}

template <typename F>
void dispatch(Precision p, F&& f) {
  if (p == Precision::Float)
    f(float{});
  else
    f(double{});
}

}  // namespace

ExperimentConfig effective_config(const Options& opt) {
  ExperimentConfig c = opt.config ? load_config(*opt.config) : parse_config("");
  if (opt.seed) {
    c.seed = *opt.seed;
    c.ae.seed = c.train.seed = c.seed;
  }
  if (opt.out) c.out = *opt.out;
  return c;
}

int run(const std::string& command, const Options& opt) {
  try {
    if (opt.workers < 0) throw ConfigError("--workers must be >= 0");
    if (opt.workers > 0) kernels::set_num_threads(opt.workers);
    if (command == "export-figures") {
      export_figures(opt.run_dir ? *opt.run_dir : effective_config(opt).out);
      return kOk;
    }
    const ExperimentConfig c = effective_config(opt);
    if (command == "train-ae") {
      dispatch(c.precision, [&](auto tag) { train_ae<decltype(tag)>(c, opt); });
    } else if (command == "train-prdad") {
      dispatch(c.precision, [&](auto tag) { train_prdad<decltype(tag)>(c, opt); });
    } else if (command == "eval") {
      // Evaluation runs at the precision the checkpoint was written in.
      std::optional<Checkpoint> ck;
      Precision p = c.precision;
      if (!c.eval.oracle) {
        if (!opt.checkpoint)
          throw ConfigError("eval needs --checkpoint PATH (or eval.oracle = true)");
        ck = load(*opt.checkpoint);
        p = ck->manifest.value("precision", std::string("float")) == "double" ? Precision::Double
                                                                              : Precision::Float;
      }
      dispatch(p, [&](auto tag) { eval_model<decltype(tag)>(c, opt, ck); });
    } else if (command == "baseline") {
      baseline(c);
    } else {
      throw ConfigError("unknown command " + command);
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const FormatError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace prdad::cli
