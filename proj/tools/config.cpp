#include "config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "prdad/errors.hpp"

namespace prdad::cli {
namespace {

enum : unsigned { kNone = 0, kAe = 1, kPr = 2, kBoth = 3 };

struct Field {
  const char* section;
  const char* key;
  const char* doc;
  unsigned stages;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void bad_value(const std::string& v, const char* what) {
  throw ConfigError("cannot read '" + v + "' as " + what);
}

double to_double(const std::string& v) {
  double x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(v, "a number");
  return x;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(v, "a non-negative integer");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  bad_value(v, "a boolean");
}

std::vector<std::size_t> to_list(const std::string& v, std::size_t count) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(to_u64(trim(item)));
  if (out.size() != count)
    bad_value(v, (std::to_string(count) + " comma separated integers").c_str());
  return out;
}

std::string str(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}
std::string str(std::uint64_t x) { return std::to_string(x); }
std::string str(bool b) { return b ? "true" : "false"; }
template <typename C>
std::string str_list(const C& c) {
  std::string s;
  for (auto v : c) s += (s.empty() ? "" : ",") + std::to_string(v);
  return s;
}

// Setter/getter pairs for the common field types.
#define NUM(expr)                                                                 \
  [](ExperimentConfig& c, const std::string& v) { c.expr = to_double(v); },      \
      [](const ExperimentConfig& c) { return str(static_cast<double>(c.expr)); }
#define INT(expr)                                                                             \
  [](ExperimentConfig& c, const std::string& v) { c.expr = static_cast<decltype(c.expr)>(to_u64(v)); }, \
      [](const ExperimentConfig& c) { return str(static_cast<std::uint64_t>(c.expr)); }
#define BOOL(expr)                                                             \
  [](ExperimentConfig& c, const std::string& v) { c.expr = to_bool(v); },     \
      [](const ExperimentConfig& c) { return str(c.expr); }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      {"experiment", "name", "label used in reports", kNone,
       [](ExperimentConfig& c, const std::string& v) { c.name = v; },
       [](const ExperimentConfig& c) { return c.name; }},
      {"experiment", "seed", "seeds initialization, shuffling and augmentation", kBoth,
       INT(seed)},
      {"experiment", "precision", "float | double", kBoth,
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "float") c.precision = Precision::Float;
         else if (v == "double") c.precision = Precision::Double;
         else bad_value(v, "float or double");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.precision == Precision::Float ? "float" : "double");
       }},
      {"experiment", "out", "output directory (the --out flag overrides it)", kNone,
       [](ExperimentConfig& c, const std::string& v) { c.out = v; },
       [](const ExperimentConfig& c) { return c.out.string(); }},

      // The dataset name selects the built-in preprocessing spec, so it is
      // applied before every other key.
      {"data", "dataset", "mnist | emnist | kmnist | fashion-mnist | celeba", kBoth,
       [](ExperimentConfig& c, const std::string& v) {
         try {
           c.spec = data::dataset_spec(v);
         } catch (const std::exception& e) {
           throw ConfigError(e.what());
         }
         c.source.name = v;
       },
       [](const ExperimentConfig& c) { return c.source.name; }},
      {"data", "root", "directory holding the dataset files", kNone,
       [](ExperimentConfig& c, const std::string& v) { c.source.root = v; },
       [](const ExperimentConfig& c) { return c.source.root.string(); }},
      {"data", "train_limit", "training images to load, 0 for all", kBoth,
       INT(source.train_limit)},
      {"data", "test_limit", "test images to load, 0 for all", kNone, INT(source.test_limit)},
      {"data", "augment", "apply the dataset's random augmentations", kBoth, BOOL(augment)},
      {"data", "pad_per_side", "the padding fraction applies to each side instead of the total",
       kPr, BOOL(model.padding.per_side)},
      {"data", "pad_placement", "centered | top-left placement of the image in the padded grid",
       kPr,
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "centered") c.model.padding.placement = fourier::PadPlacement::Centered;
         else if (v == "top-left") c.model.padding.placement = fourier::PadPlacement::TopLeft;
         else bad_value(v, "centered or top-left");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.model.padding.placement == fourier::PadPlacement::Centered
                                ? "centered"
                                : "top-left");
       }},

      {"encoder", "widths", "channels of the three encoder blocks; the last is N", kBoth,
       [](ExperimentConfig& c, const std::string& v) {
         auto w = to_list(v, 3);
         std::copy(w.begin(), w.end(), c.model.encoder.widths.begin());
       },
       [](const ExperimentConfig& c) { return str_list(c.model.encoder.widths); }},
      {"encoder", "activation", "prelu | relu", kBoth,
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "prelu") c.model.encoder.activation = nn::Activation::PReLU;
         else if (v == "relu") c.model.encoder.activation = nn::Activation::ReLU;
         else bad_value(v, "prelu or relu");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.model.encoder.activation == nn::Activation::PReLU ? "prelu"
                                                                                : "relu");
       }},

      {"autoencoder", "epochs", "autoencoder training epochs", kNone, INT(ae.epochs)},
      {"autoencoder", "batch_size", "", kAe, INT(ae.batch_size)},
      {"autoencoder", "lambda_sparse", "weight of the l1 penalty on the representation", kAe,
       NUM(ae.lambda_sparse)},
      {"autoencoder", "lr", "Adam step size", kAe, NUM(ae.adam.lr)},
      {"autoencoder", "decay", "learning-rate factor applied after every epoch", kAe,
       NUM(ae.adam.decay)},

      {"model", "decoder", "packet | haar | trained", kPr,
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "packet" || v == "haar") {
           c.model.decoder = model::DecoderKind::Packet;
           c.model.tree = v == "packet" ? wavelet::Tree::Packet : wavelet::Tree::Wavelet;
         } else if (v == "trained") {
           c.model.decoder = model::DecoderKind::Trained;
         } else {
           bad_value(v, "packet, haar or trained");
         }
       },
       [](const ExperimentConfig& c) {
         if (c.model.decoder == model::DecoderKind::Trained) return std::string("trained");
         return std::string(c.model.tree == wavelet::Tree::Packet ? "packet" : "haar");
       }},
      {"model", "depth", "wavelet levels, 0 for full depth", kPr, INT(model.packet_depth)},
      {"model", "autoencoder", "train-ae checkpoint supplying the trained decoder", kNone,
       [](ExperimentConfig& c, const std::string& v) { c.autoencoder_checkpoint = v; },
       [](const ExperimentConfig& c) { return c.autoencoder_checkpoint.string(); }},
      {"model", "hidden", "widths of the three hidden MLP layers", kPr,
       [](ExperimentConfig& c, const std::string& v) {
         auto w = to_list(v, 3);
         std::copy(w.begin(), w.end(), c.model.hidden.begin());
       },
       [](const ExperimentConfig& c) { return str_list(c.model.hidden); }},
      {"model", "enhancement_blocks", "auto (3 trained, 0 wavelet) or a count", kPr,
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "auto") c.model.enhancement_blocks.reset();
         else c.model.enhancement_blocks = to_u64(v);
       },
       [](const ExperimentConfig& c) {
         return c.model.enhancement_blocks ? std::to_string(*c.model.enhancement_blocks)
                                           : std::string("auto");
       }},
      {"model", "input", "raw | log1p transform of the magnitudes", kPr,
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "raw") c.model.input = model::MagnitudeInput::Raw;
         else if (v == "log1p") c.model.input = model::MagnitudeInput::Log1p;
         else bad_value(v, "raw or log1p");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.model.input == model::MagnitudeInput::Raw ? "raw" : "log1p");
       }},
      {"model", "input_scale", "factor on the magnitudes, 0 for 1/m", kPr,
       NUM(model.input_scale)},
      {"model", "finetune_fraction", "share of final epochs with the trained decoder unfrozen",
       kPr, NUM(model.finetune_fraction)},

      {"loss", "mse", "weight of the orientation-resolved pixel MSE", kPr, NUM(train.weights.mse)},
      {"loss", "mag", "weight of the magnitude cycle loss", kPr, NUM(train.weights.mag)},
      {"loss", "sparse", "weight of the l1 penalty on the representation", kPr,
       NUM(train.weights.sparse)},
      {"loss", "encode", "weight of the representation MSE", kPr, NUM(train.weights.encode)},

      {"optim", "lr", "Adam step size", kPr, NUM(train.adam.lr)},
      {"optim", "beta1", "", kPr, NUM(train.adam.beta1)},
      {"optim", "beta2", "", kPr, NUM(train.adam.beta2)},
      {"optim", "eps", "", kPr, NUM(train.adam.eps)},
      {"optim", "decay", "learning-rate factor applied after every epoch", kPr,
       NUM(train.adam.decay)},

      {"train", "epochs", "PR-DAD training epochs", kNone, INT(train.epochs)},
      {"train", "batch_size", "", kPr, INT(train.batch_size)},
      {"train", "val_fraction", "share of training images held out for validation", kPr,
       NUM(train.val_fraction)},
      {"train", "checkpoint_every", "epochs between checkpoints, 0 for the end only", kNone,
       INT(train.checkpoint_every)},

      {"eval", "orientation_resolve", "score the better of x and its point reflection", kNone,
       BOOL(eval.orientation_resolve)},
      {"eval", "peak", "pixel peak used by PSNR on the [0,1] scale", kNone, NUM(eval.peak)},
      {"eval", "clamp", "clip reconstructions to [0,1] before scoring", kNone, BOOL(eval.clamp)},
      {"eval", "grid", "image pairs in the exported grid", kNone, INT(eval.grid)},
      {"eval", "batch", "images per inference batch", kNone, INT(eval.batch)},
      {"eval", "oracle", "debug: score the ground truth against itself", kNone,
       BOOL(eval.oracle)},

      {"baseline", "method", "er | hio", kNone,
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "er") c.baseline.method = BaselineSettings::Method::ErrorReduction;
         else if (v == "hio") c.baseline.method = BaselineSettings::Method::HIO;
         else bad_value(v, "er or hio");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.baseline.method == BaselineSettings::Method::HIO ? "hio" : "er");
       }},
      {"baseline", "iterations", "", kNone, INT(baseline.iterations)},
      {"baseline", "beta", "HIO feedback", kNone, NUM(baseline.beta)},
      {"baseline", "count", "test images, 0 for the whole split", kNone, INT(baseline.count)},
      {"baseline", "support", "restrict the object to the unpadded image", kNone,
       BOOL(baseline.support)},
      {"baseline", "nonneg", "project onto non-negative images", kNone, BOOL(baseline.nonneg)},
  };
  return fields;
}

#undef NUM
#undef INT
#undef BOOL

ExperimentConfig defaults() {
  ExperimentConfig c;
  c.source.name = "mnist";
  c.source.root = "data/mnist";
  // The command line keeps a last-good checkpoint after every epoch.
  c.train.checkpoint_every = 1;
  return c;
}

// Quantities that follow from the dataset spec rather than being set.
void resolve(ExperimentConfig& c) {
  c.model.image_size = c.spec.resize;
  c.model.encoder.input_size = c.spec.resize;
  c.model.padding.fraction = c.spec.pad_fraction;
  c.ae.seed = c.seed;
  c.ae.augment = c.augment;
  c.train.seed = c.seed;
  c.train.augment = c.augment;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::pair<std::string, int>> values;
  std::stringstream ss(text);
  std::string section;
  int lineno = 0;
  for (std::string raw; std::getline(ss, raw);) {
    ++lineno;
    const std::string line = trim(raw);
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& f : schema()) known |= section == f.section;
      if (!known) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    if (values.count(key)) throw ConfigError(where + "duplicate key " + key);
    values[key] = {trim(line.substr(eq + 1)), lineno};
  }

  ExperimentConfig c = defaults();
  for (const auto& f : schema()) {
    auto it = values.find(std::string(f.section) + "." + f.key);
    if (it == values.end()) continue;
    try {
      f.set(c, it->second.first);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(it->second.second) + ": " + it->first + ": " +
                        e.what());
    }
    values.erase(it);
  }
  if (!values.empty()) {
    const auto& [key, v] = *values.begin();
    throw ConfigError("line " + std::to_string(v.second) + ": unknown key " + key);
  }
  resolve(c);
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_text(const ExperimentConfig& c) {
  std::string out, section;
  for (const auto& f : schema()) {
    if (section != f.section) {
      section = f.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += std::string(f.key) + " = " + f.get(c) + "\n";
  }
  return out;
}

std::string commented_example() {
  const ExperimentConfig c = [] {
    auto d = defaults();
    resolve(d);
    return d;
  }();
  std::string out =
      "# Experiment configuration. Every key is optional and shown with its\n"
      "# default; unknown keys are rejected.\n";
  std::string section;
  for (const auto& f : schema()) {
    if (section != f.section) {
      section = f.section;
      out += "\n[" + section + "]\n";
    }
    if (*f.doc) out += std::string("# ") + f.doc + "\n";
    out += std::string(f.key) + " = " + f.get(c) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& c, Stage stage) {
  const unsigned bit = stage == Stage::Autoencoder ? kAe : kPr;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& f : schema())
    if (f.stages & bit) feed(std::string(f.section) + "." + f.key + "=" + f.get(c) + "\n");
  return h;
}

void validate(const ExperimentConfig& c) {
  c.spec.validate();
  c.model.validate();
  c.train.weights.validate();
  c.train.adam.validate();
  c.ae.adam.validate();
  if (c.ae.batch_size == 0 || c.train.batch_size == 0)
    throw ConfigError("batch_size must be positive");
  if (c.ae.lambda_sparse < 0) throw ConfigError("autoencoder.lambda_sparse must be >= 0");
  if (c.train.val_fraction < 0 || c.train.val_fraction >= 1)
    throw ConfigError("train.val_fraction must lie in [0, 1)");
  if (c.baseline.iterations < 0) throw ConfigError("baseline.iterations must be >= 0");
  if (c.eval.peak <= 0) throw ConfigError("eval.peak must be positive");
  if (c.eval.batch == 0) throw ConfigError("eval.batch must be positive");
}

}  // namespace prdad::cli
