#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <map>
#include <set>

#include "slangdef/errors.hpp"
#include "slangdef/random.hpp"

namespace slangdef::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"data", {"corpus", "test_fraction", "dev_fraction", "strict", "context_words", "context_chars",
                "target_chars", "output_words"}},
      {"vocab", {"word_max_size", "word_min_count", "char_max_size", "char_min_count"}},
      {"model", {"variant", "hidden", "word_embed", "char_embed", "attn", "layers"}},
      {"train", {"initial_lr", "lr_decay", "patience", "clip_norm", "batch_size", "max_epochs", "min_lr"}},
      {"decode", {"mode", "beam_width", "max_len", "length_alpha"}},
      {"run", {"seed", "output_dir"}},
  };
  return keys;
}

void check_keys(const pt::ptree& tree, const std::filesystem::path& path) {
  const auto& keys = known_keys();
  for (const auto& [section, body] : tree) {
    const auto it = keys.find(section);
    if (it == keys.end()) throw UsageError(path.string() + ": unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw UsageError(path.string() + ": unknown key '" + key + "' in [" + section + "]");
    }
  }
}

template <typename T>
void read(const pt::ptree& tree, const std::string& key, T& into) {
  const auto v = tree.get_optional<std::string>(key);
  if (!v) return;
  const auto parsed = tree.get_optional<T>(key);
  if (!parsed) throw UsageError("config: cannot parse " + key + " = '" + *v + "'");
  into = *parsed;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw UsageError("config file not found: " + path.string());
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  check_keys(tree, path);
  const std::filesystem::path base = std::filesystem::absolute(path).parent_path();

  RunConfig c;
  const auto corpus = tree.get_optional<std::string>("data.corpus");
  if (!corpus) throw UsageError(path.string() + ": [data] corpus is required");
  c.corpus = resolve(base, *corpus);
  read(tree, "data.test_fraction", c.test_fraction);
  read(tree, "data.dev_fraction", c.dev_fraction);
  read(tree, "data.strict", c.strict);
  read(tree, "data.context_words", c.caps.context_words);
  read(tree, "data.context_chars", c.caps.context_chars);
  read(tree, "data.target_chars", c.caps.target_chars);
  read(tree, "data.output_words", c.caps.output_words);

  read(tree, "vocab.word_max_size", c.vocab.word_max_size);
  read(tree, "vocab.word_min_count", c.vocab.word_min_count);
  read(tree, "vocab.char_max_size", c.vocab.char_max_size);
  read(tree, "vocab.char_min_count", c.vocab.char_min_count);

  if (const auto v = tree.get_optional<std::string>("model.variant")) {
    try {
      c.model.variant = parse_variant(*v);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
  }
  read(tree, "model.hidden", c.model.hidden);
  read(tree, "model.word_embed", c.model.word_embed);
  read(tree, "model.char_embed", c.model.char_embed);
  read(tree, "model.attn", c.model.attn);
  read(tree, "model.layers", c.model.layers);

  read(tree, "train.initial_lr", c.train.initial_lr);
  read(tree, "train.lr_decay", c.train.lr_decay);
  read(tree, "train.patience", c.train.patience);
  read(tree, "train.clip_norm", c.train.clip_norm);
  read(tree, "train.batch_size", c.train.batch_size);
  read(tree, "train.max_epochs", c.train.max_epochs);
  read(tree, "train.min_lr", c.train.min_lr);

  if (const auto m = tree.get_optional<std::string>("decode.mode")) {
    if (*m == "greedy") {
      c.decode.mode = DecodeMode::Greedy;
    } else if (*m == "beam") {
      c.decode.mode = DecodeMode::Beam;
    } else {
      throw UsageError("config: decode.mode must be greedy or beam, got '" + *m + "'");
    }
  }
  read(tree, "decode.beam_width", c.decode.beam_width);
  read(tree, "decode.max_len", c.decode.max_len);
  read(tree, "decode.length_alpha", c.decode.length_alpha);

  read(tree, "run.seed", c.seed);
  c.output_dir = resolve(base, tree.get<std::string>("run.output_dir", "runs/default"));
  return c;
}

void apply(RunConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.variant) {
    try {
      cfg.model.variant = parse_variant(*o.variant);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (o.hidden) cfg.model.hidden = *o.hidden;
  if (o.beam) {
    cfg.decode.mode = DecodeMode::Beam;
    cfg.decode.beam_width = *o.beam;
  }
  if (o.max_len) cfg.decode.max_len = *o.max_len;
  if (o.strict) cfg.strict = true;
}

void RunConfig::validate() const {
  auto fraction = [](double f, const char* name) {
    if (!(f > 0.0 && f < 1.0)) throw UsageError(std::string("config: ") + name + " must lie in (0, 1)");
  };
  fraction(test_fraction, "data.test_fraction");
  fraction(dev_fraction, "data.dev_fraction");
  if (caps.context_words == 0 || caps.context_chars == 0 || caps.target_chars == 0 || caps.output_words == 0) {
    throw UsageError("config: sequence caps must be positive");
  }
  if (vocab.word_max_size <= kNumSpecials) throw UsageError("config: vocab.word_max_size must exceed 4");
  if (vocab.char_max_size != 0 && vocab.char_max_size <= kNumSpecials) {
    throw UsageError("config: vocab.char_max_size must be 0 (uncapped) or exceed 4");
  }
  if (vocab.word_min_count == 0 || vocab.char_min_count == 0) throw UsageError("config: min counts must be >= 1");
  if (model.hidden == 0 || model.layers == 0) throw UsageError("config: model.hidden and model.layers must be positive");
  try {
    train.validate();
    decode.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

std::uint64_t RunConfig::split_seed() const { return derive_seed(seed, "split"); }
std::uint64_t RunConfig::dev_seed() const { return derive_seed(seed, "dev"); }
std::uint64_t RunConfig::init_seed() const { return derive_seed(seed, "init"); }
std::uint64_t RunConfig::shuffle_seed() const { return derive_seed(seed, "shuffle"); }

}  // namespace slangdef::cli
