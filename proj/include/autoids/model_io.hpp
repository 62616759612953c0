#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "autoids/ensemble.hpp"
#include "autoids/error.hpp"
#include "autoids/learner.hpp"

namespace autoids {

inline constexpr char kModelMagic[4] = {'A', 'I', 'D', 'S'};
inline constexpr std::uint32_t kModelSchemaVersion = 1;

namespace io_detail {

// SHA-256 (FIPS 180-4), used as the model-file content digest
class Sha256 {
 public:
  Sha256() { reset(); }

  void reset() {
    state_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
              0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
    total_ = 0;
    buffer_len_ = 0;
  }

  void update(const std::uint8_t* data, std::size_t len) {
    total_ += len;
    while (len > 0) {
      const std::size_t take = std::min(len, std::size_t{64} - buffer_len_);
      std::memcpy(buffer_.data() + buffer_len_, data, take);
      buffer_len_ += take;
      data += take;
      len -= take;
      if (buffer_len_ == 64) {
        process(buffer_.data());
        buffer_len_ = 0;
      }
    }
  }

  std::array<std::uint8_t, 32> finish() {
    const std::uint64_t bit_len = total_ * 8;
    const std::uint8_t pad = 0x80;
    update(&pad, 1);
    const std::uint8_t zero = 0x00;
    while (buffer_len_ != 56) update(&zero, 1);
    std::uint8_t len_bytes[8];
    for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<std::uint8_t>(bit_len >> (56 - 8 * i));
    update(len_bytes, 8);

    std::array<std::uint8_t, 32> digest{};
    for (int i = 0; i < 8; ++i) {
      digest[static_cast<std::size_t>(4 * i)] = static_cast<std::uint8_t>(state_[static_cast<std::size_t>(i)] >> 24);
      digest[static_cast<std::size_t>(4 * i + 1)] = static_cast<std::uint8_t>(state_[static_cast<std::size_t>(i)] >> 16);
      digest[static_cast<std::size_t>(4 * i + 2)] = static_cast<std::uint8_t>(state_[static_cast<std::size_t>(i)] >> 8);
      digest[static_cast<std::size_t>(4 * i + 3)] = static_cast<std::uint8_t>(state_[static_cast<std::size_t>(i)]);
    }
    return digest;
  }

 private:
  static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

  void process(const std::uint8_t* chunk) {
    static constexpr std::uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2};
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (static_cast<std::uint32_t>(chunk[4 * i]) << 24) |
             (static_cast<std::uint32_t>(chunk[4 * i + 1]) << 16) |
             (static_cast<std::uint32_t>(chunk[4 * i + 2]) << 8) |
             static_cast<std::uint32_t>(chunk[4 * i + 3]);
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3];
    std::uint32_t e = state_[4], f = state_[5], g = state_[6], h = state_[7];
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t temp1 = h + s1 + ch + k[i] + w[i];
      const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t temp2 = s0 + maj;
      h = g;
      g = f;
      f = e;
      e = d + temp1;
      d = c;
      c = b;
      b = a;
      a = temp1 + temp2;
    }
    state_[0] += a;
    state_[1] += b;
    state_[2] += c;
    state_[3] += d;
    state_[4] += e;
    state_[5] += f;
    state_[6] += g;
    state_[7] += h;
  }

  std::array<std::uint32_t, 8> state_{};
  std::array<std::uint8_t, 64> buffer_{};
  std::size_t buffer_len_ = 0;
  std::uint64_t total_ = 0;
};

inline std::array<std::uint8_t, 32> sha256(const std::uint8_t* data, std::size_t len) {
  Sha256 hasher;
  hasher.update(data, len);
  return hasher.finish();
}

// little-endian buffer writer
class Writer {
 public:
  std::vector<std::uint8_t>& bytes() { return bytes_; }

  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

// bounds-checked little-endian reader; malformed input raises PersistError
class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == len_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > len_) throw PersistError("model file truncated or corrupt");
  }
  const std::uint8_t* data_;
  std::size_t len_;
  std::size_t pos_ = 0;
};

inline void write_spec(Writer& w, const LearnerSpec& spec) {
  w.u8(static_cast<std::uint8_t>(spec.family));
  w.u32(static_cast<std::uint32_t>(spec.params.size()));
  for (const auto& [name, value] : spec.params) {
    w.str(name);
    if (const auto* i = std::get_if<std::int64_t>(&value)) {
      w.u8(0);
      w.u64(static_cast<std::uint64_t>(*i));
    } else if (const auto* d = std::get_if<double>(&value)) {
      w.u8(1);
      w.f64(*d);
    } else {
      w.u8(2);
      w.str(std::get<std::string>(value));
    }
  }
}

inline LearnerSpec read_spec(Reader& r) {
  LearnerSpec spec;
  spec.family = static_cast<Family>(r.u8());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const std::uint8_t type = r.u8();
    if (type == 0)
      spec.params[name] = static_cast<std::int64_t>(r.u64());
    else if (type == 1)
      spec.params[name] = r.f64();
    else if (type == 2)
      spec.params[name] = r.str();
    else
      throw PersistError("unknown hyperparameter value type");
  }
  return spec;
}

inline void write_model(Writer& w, const TrainedModel& model) {
  w.u8(static_cast<std::uint8_t>(model.family));
  w.u64(model.feature_count);
  w.u32(static_cast<std::uint32_t>(model.n_classes));
  if (const auto* forest = std::get_if<ClassForest>(&model.impl)) {
    w.u8(0);
    w.u8(forest->criterion == SplitCriterion::gini ? 0 : 1);
    w.u32(static_cast<std::uint32_t>(forest->trees.size()));
    for (const Tree& tree : forest->trees) {
      w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
      for (const TreeNode& node : tree.nodes) {
        w.i32(node.feature);
        w.f64(node.threshold);
        w.i32(node.left);
        w.i32(node.right);
        w.u32(node.count);
        for (const double v : node.dist) w.f64(v);
      }
    }
  } else {
    const auto& boost = std::get<BoostModel>(model.impl);
    w.u8(1);
    w.f64(boost.learning_rate);
    w.u32(static_cast<std::uint32_t>(boost.n_rounds));
    w.u32(static_cast<std::uint32_t>(boost.trees.size()));
    for (const RegTree& tree : boost.trees) {
      w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
      for (const RegNode& node : tree.nodes) {
        w.i32(node.feature);
        w.f64(node.threshold);
        w.i32(node.left);
        w.i32(node.right);
        w.f64(node.value);
        w.f64(node.gain);
        w.u32(node.count);
      }
    }
  }
}

inline TrainedModel read_model(Reader& r) {
  TrainedModel model;
  model.family = static_cast<Family>(r.u8());
  model.feature_count = r.u64();
  model.n_classes = static_cast<int>(r.u32());
  const std::uint8_t kind = r.u8();
  if (kind == 0) {
    ClassForest forest;
    forest.criterion = r.u8() == 0 ? SplitCriterion::gini : SplitCriterion::entropy;
    forest.trees.resize(r.u32());
    for (Tree& tree : forest.trees) {
      tree.nodes.resize(r.u32());
      for (TreeNode& node : tree.nodes) {
        node.feature = r.i32();
        node.threshold = r.f64();
        node.left = r.i32();
        node.right = r.i32();
        node.count = r.u32();
        node.dist.resize(static_cast<std::size_t>(model.n_classes));
        for (double& v : node.dist) v = r.f64();
      }
    }
    model.impl = std::move(forest);
  } else if (kind == 1) {
    BoostModel boost;
    boost.n_classes = model.n_classes;
    boost.learning_rate = r.f64();
    boost.n_rounds = static_cast<int>(r.u32());
    boost.trees.resize(r.u32());
    for (RegTree& tree : boost.trees) {
      tree.nodes.resize(r.u32());
      for (RegNode& node : tree.nodes) {
        node.feature = r.i32();
        node.threshold = r.f64();
        node.left = r.i32();
        node.right = r.i32();
        node.value = r.f64();
        node.gain = r.f64();
        node.count = r.u32();
      }
    }
    model.impl = std::move(boost);
  } else {
    throw PersistError("unknown model kind");
  }
  return model;
}

}  // namespace io_detail

// Binary model file: magic, schema version, body, trailing 32-byte
// content digest. The version gate runs before any body parsing; the
// digest is verified before the body is trusted.
inline void save_model(const StackedEnsemble& e, const std::string& config_snapshot,
                       const std::string& path) {
  io_detail::Writer w;
  w.bytes().insert(w.bytes().end(), kModelMagic, kModelMagic + 4);
  w.u32(kModelSchemaVersion);

  w.u32(static_cast<std::uint32_t>(e.class_names.size()));
  for (const auto& name : e.class_names) w.str(name);
  w.u64(e.original_feature_count);
  w.u32(static_cast<std::uint32_t>(e.feature_names.size()));
  for (const auto& name : e.feature_names) w.str(name);

  w.u32(static_cast<std::uint32_t>(e.selection.selected.size()));
  for (const std::size_t idx : e.selection.selected) w.u64(idx);
  w.f64(e.selection.cumulative);
  w.f64(e.selection.alpha);
  w.u8(e.selection.all_features_fallback ? 1 : 0);

  w.u8(e.mode == MetaFeatureMode::out_of_fold ? 0 : 1);
  w.u8(static_cast<std::uint8_t>(e.base_models.size()));
  for (std::size_t m = 0; m < e.base_models.size(); ++m) {
    io_detail::write_spec(w, e.base_specs[m]);
    io_detail::write_model(w, e.base_models[m]);
  }
  w.u8(static_cast<std::uint8_t>(e.meta_family));
  io_detail::write_spec(w, e.meta_spec);
  io_detail::write_model(w, e.meta_model);
  w.str(config_snapshot);

  const auto digest = io_detail::sha256(w.bytes().data(), w.bytes().size());
  w.bytes().insert(w.bytes().end(), digest.begin(), digest.end());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PersistError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw PersistError("write failed for '" + path + "'");
}

struct LoadedModel {
  StackedEnsemble ensemble;
  std::string config_snapshot;
  std::array<std::uint8_t, 32> digest{};
};

inline LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PersistError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 4 + 4 + 32) throw PersistError("model file truncated");
  if (std::memcmp(bytes.data(), kModelMagic, 4) != 0)
    throw PersistError("not a model file (bad magic)");

  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= static_cast<std::uint32_t>(bytes[4 + static_cast<std::size_t>(i)]) << (8 * i);
  if (version != kModelSchemaVersion)
    throw PersistError("unsupported model schema version " + std::to_string(version) +
                       " (expected " + std::to_string(kModelSchemaVersion) + ")");

  const std::size_t body_end = bytes.size() - 32;
  const auto expected = io_detail::sha256(bytes.data(), body_end);
  if (std::memcmp(expected.data(), bytes.data() + body_end, 32) != 0)
    throw PersistError("model file digest mismatch");

  io_detail::Reader r(bytes.data() + 8, body_end - 8);
  LoadedModel loaded;
  std::copy(expected.begin(), expected.end(), loaded.digest.begin());
  StackedEnsemble& e = loaded.ensemble;

  e.class_names.resize(r.u32());
  for (auto& name : e.class_names) name = r.str();
  e.original_feature_count = r.u64();
  e.feature_names.resize(r.u32());
  for (auto& name : e.feature_names) name = r.str();

  e.selection.selected.resize(r.u32());
  for (auto& idx : e.selection.selected) idx = r.u64();
  e.selection.cumulative = r.f64();
  e.selection.alpha = r.f64();
  e.selection.all_features_fallback = r.u8() != 0;

  e.mode = r.u8() == 0 ? MetaFeatureMode::out_of_fold : MetaFeatureMode::paper_literal;
  const std::uint8_t n_base = r.u8();
  for (std::uint8_t m = 0; m < n_base; ++m) {
    e.base_specs.push_back(io_detail::read_spec(r));
    e.base_models.push_back(io_detail::read_model(r));
    e.base_families.push_back(e.base_specs.back().family);
  }
  e.meta_family = static_cast<Family>(r.u8());
  e.meta_spec = io_detail::read_spec(r);
  e.meta_model = io_detail::read_model(r);
  loaded.config_snapshot = r.str();
  if (!r.done()) throw PersistError("trailing bytes after model body");
  return loaded;
}

}  // namespace autoids
