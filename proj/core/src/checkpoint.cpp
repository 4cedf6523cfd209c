#include "slangdef/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

#include "slangdef/errors.hpp"
#include "slangdef/random.hpp"

namespace slangdef {

namespace {

constexpr std::string_view kMagic = "SLGDCKPT";

class Writer {
 public:
  void bytes(std::string_view s) { buf_.append(s); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    std::string_view out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte(pos_ + i)) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte(pos_ + i)) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  unsigned char byte(std::size_t i) const { return static_cast<unsigned char>(data_[i]); }
  void need(std::size_t n) const {
    if (remaining() < n) {
      throw CheckpointError("checkpoint " + source_ + " is truncated at byte " + std::to_string(pos_));
    }
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string source_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DualEncoderModel& model,
                     const CheckpointMeta& meta) {
  const ModelConfig& c = model.config();
  Writer w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.variant));
  for (std::size_t d : {c.hidden, c.word_embed, c.char_embed, c.attn, c.layers, c.word_vocab, c.char_vocab}) {
    w.u64(d);
  }
  w.u64(meta.word_vocab_hash);
  w.u64(meta.char_vocab_hash);
  w.u64(meta.seed);
  w.u64(meta.progress.epoch);
  w.u64(meta.progress.step);
  w.f64(meta.progress.lr);
  w.f64(meta.progress.best_dev_loss);
  w.u64(meta.progress.epochs_since_improvement);

  const auto params = named_parameters(model.params());
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, m] : params) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u64(m->rows());
    w.u64(m->cols());
    for (double v : m->values()) w.f64(v);
  }
  w.u64(fnv1a64(w.buffer()));

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw CheckpointError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string source = path.string();

  if (data.size() < kMagic.size() + 8 || std::string_view(data).substr(0, kMagic.size()) != kMagic) {
    throw CheckpointError("checkpoint " + source + " has no valid header");
  }
  {
    Reader tail(std::string_view(data).substr(data.size() - 8), source);
    const std::uint64_t stored = tail.u64();
    if (stored != fnv1a64(std::string_view(data).substr(0, data.size() - 8))) {
      throw CheckpointError("checkpoint " + source + " is corrupt or truncated (checksum mismatch)");
    }
  }

  Reader r(std::string_view(data).substr(0, data.size() - 8), source);
  r.bytes(kMagic.size());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint " + source + " has format version " + std::to_string(version) +
                          ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  const std::uint32_t variant_tag = r.u32();
  if (variant_tag > static_cast<std::uint32_t>(Variant::FullCharLevel)) {
    throw CheckpointError("checkpoint " + source + " has unknown variant tag " +
                          std::to_string(variant_tag));
  }
  ModelConfig config;
  config.variant = static_cast<Variant>(variant_tag);
  config.hidden = r.u64();
  config.word_embed = r.u64();
  config.char_embed = r.u64();
  config.attn = r.u64();
  config.layers = r.u64();
  config.word_vocab = r.u64();
  config.char_vocab = r.u64();

  CheckpointMeta meta;
  meta.word_vocab_hash = r.u64();
  meta.char_vocab_hash = r.u64();
  meta.seed = r.u64();
  meta.progress.epoch = r.u64();
  meta.progress.step = r.u64();
  meta.progress.lr = r.f64();
  meta.progress.best_dev_loss = r.f64();
  meta.progress.epochs_since_improvement = r.u64();

  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError("checkpoint " + source + " declares invalid dimensions: " + e.what());
  }
  // A zero-initialized model fixes the expected block names and shapes.
  DualEncoderModel model = DualEncoderModel::zeros(config);
  ModelParams params = model.params();
  auto expected = named_parameters(params);

  const std::uint32_t count = r.u32();
  if (count != expected.size()) {
    throw CheckpointError("checkpoint " + source + " holds " + std::to_string(count) +
                          " parameter blocks, expected " + std::to_string(expected.size()));
  }
  for (auto& [name, m] : expected) {
    const std::uint32_t name_len = r.u32();
    const std::string_view got_name = r.bytes(name_len);
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (got_name != name || rows != m->rows() || cols != m->cols()) {
      throw CheckpointError("checkpoint " + source + ": block '" + std::string(got_name) + "' (" +
                            std::to_string(rows) + "x" + std::to_string(cols) + ") does not match '" +
                            name + "' (" + m->shape_string() + ")");
    }
    for (double& v : m->values()) v = r.f64();
  }
  if (r.remaining() != 0) {
    throw CheckpointError("checkpoint " + source + " has " + std::to_string(r.remaining()) +
                          " trailing bytes");
  }
  return {DualEncoderModel::from_params(config, std::move(params)), meta};
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const Vocabulary& words,
                                 const Vocabulary* chars) {
  LoadedCheckpoint loaded = load_checkpoint(path);
  const ModelConfig& c = loaded.model.config();
  if (loaded.meta.word_vocab_hash != words.content_hash() || c.word_vocab != words.size()) {
    throw CheckpointError("checkpoint " + path.string() +
                          " was trained with a different word vocabulary (hash or size mismatch)");
  }
  if (c.uses_char_vocab()) {
    if (chars == nullptr) {
      throw CheckpointError("checkpoint " + path.string() + " needs a character vocabulary");
    }
    if (loaded.meta.char_vocab_hash != chars->content_hash() || c.char_vocab != chars->size()) {
      throw CheckpointError("checkpoint " + path.string() +
                            " was trained with a different character vocabulary (hash or size mismatch)");
    }
  }
  return loaded;
}

}  // namespace slangdef
