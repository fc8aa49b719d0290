#include "rainlab/checkpoint.hpp"

#include <array>
#include <cstring>

#include "rainlab/errors.hpp"

namespace rainlab {

uint32_t crc32(const uint8_t* data, size_t len) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t crc = 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::vector<uint8_t>& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((bits >> (8 * i)) & 0xFF));
}

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

void put_array(std::vector<uint8_t>& out, const NamedArray& a) {
  put_u32(out, static_cast<uint32_t>(a.name.size()));
  out.insert(out.end(), a.name.begin(), a.name.end());
  put_u32(out, static_cast<uint32_t>(a.shape.size()));
  for (int d : a.shape) put_u32(out, static_cast<uint32_t>(d));
  for (double v : a.data) put_f64(out, v);
}

struct Reader {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;

  void need(size_t n) const {
    if (bytes.size() - pos < n) throw FormatError("checkpoint: truncated");
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string str(size_t n) {
    need(n);
    std::string s(bytes.begin() + pos, bytes.begin() + pos + n);
    pos += n;
    return s;
  }
};

// exact integer <-> double helpers for counters stored in f64 arrays
NamedArray scalar_array(const std::string& name, double v) { return {name, {1}, {v}}; }

void append_params(std::vector<NamedArray>& arrays, const std::string& prefix, const ParamSet& params) {
  for (const auto& [name, t] : params.items) arrays.push_back({prefix + "." + name, t.shape(), t.value()});
}

void append_opt(std::vector<NamedArray>& arrays, const std::string& prefix, const ParamSet& params,
                const AdamState& opt) {
  if (opt.m.size() != params.items.size())
    throw ContractError("checkpoint: optimizer state does not match parameters");
  for (size_t i = 0; i < params.items.size(); ++i) {
    arrays.push_back({prefix + ".m." + params.items[i].first, params.items[i].second.shape(), opt.m[i]});
    arrays.push_back({prefix + ".v." + params.items[i].first, params.items[i].second.shape(), opt.v[i]});
  }
  arrays.push_back(scalar_array(prefix + ".t", static_cast<double>(opt.step_count)));
}

}  // namespace

std::vector<uint8_t> save_checkpoint(const Checkpoint& ckpt) {
  std::vector<NamedArray> arrays;
  append_params(arrays, "gen", ckpt.gen_params);
  append_params(arrays, "disc", ckpt.disc_params);
  append_params(arrays, "feat", ckpt.feat_params);
  append_opt(arrays, "opt.gen", ckpt.gen_params, ckpt.gen_opt);
  append_opt(arrays, "opt.disc", ckpt.disc_params, ckpt.disc_opt);
  arrays.push_back(scalar_array("rng.hi", static_cast<double>(ckpt.rng_state >> 32)));
  arrays.push_back(scalar_array("rng.lo", static_cast<double>(ckpt.rng_state & 0xFFFFFFFFull)));
  arrays.push_back(scalar_array("round", static_cast<double>(ckpt.round)));
  arrays.push_back(scalar_array("filter.radius", static_cast<double>(ckpt.filter.radius)));
  arrays.push_back(scalar_array("filter.eps", ckpt.filter.eps));

  std::vector<uint8_t> out;
  out.push_back('R');
  out.push_back('L');
  out.push_back('C');
  out.push_back('K');
  put_u16(out, ckpt.version);
  put_u32(out, static_cast<uint32_t>(arrays.size()));
  for (const auto& a : arrays) put_array(out, a);
  put_u32(out, crc32(out.data(), out.size()));
  return out;
}

namespace {

struct ArrayMap {
  std::vector<NamedArray> arrays;

  const NamedArray& get(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return a;
    throw FormatError("checkpoint: missing array " + name);
  }

  ParamSet params_with_prefix(const std::string& prefix, bool requires_grad) const {
    ParamSet p;
    for (const auto& a : arrays) {
      if (a.name.size() > prefix.size() + 1 && a.name.compare(0, prefix.size() + 1, prefix + ".") == 0) {
        std::string rest = a.name.substr(prefix.size() + 1);
        p.add(rest, Tensor::leaf(a.shape, a.data, requires_grad));
      }
    }
    return p;
  }

  AdamState opt_with_prefix(const std::string& prefix, const ParamSet& params) const {
    AdamState s = AdamState::for_params(params);
    for (size_t i = 0; i < params.items.size(); ++i) {
      const NamedArray& m = get(prefix + ".m." + params.items[i].first);
      const NamedArray& v = get(prefix + ".v." + params.items[i].first);
      if (static_cast<int64_t>(m.data.size()) != params.items[i].second.size() ||
          static_cast<int64_t>(v.data.size()) != params.items[i].second.size())
        throw FormatError("checkpoint: optimizer array size mismatch at " + params.items[i].first);
      s.m[i] = m.data;
      s.v[i] = v.data;
    }
    s.step_count = static_cast<int64_t>(get(prefix + ".t").data.at(0));
    return s;
  }
};

}  // namespace

Checkpoint load_checkpoint(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 14) throw FormatError("checkpoint: truncated");
  if (bytes[0] != 'R' || bytes[1] != 'L' || bytes[2] != 'C' || bytes[3] != 'K')
    throw FormatError("checkpoint: bad magic");
  uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i) stored_crc |= static_cast<uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
  if (crc32(bytes.data(), bytes.size() - 4) != stored_crc)
    throw FormatError("checkpoint: checksum mismatch");

  Reader r{bytes, 4};
  Checkpoint ckpt;
  ckpt.version = r.u16();
  if (ckpt.version != 1) throw FormatError("checkpoint: unsupported version");
  uint32_t count = r.u32();
  ArrayMap map;
  map.arrays.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.str(r.u32());
    uint32_t rank = r.u32();
    if (rank > 8) throw FormatError("checkpoint: implausible array rank");
    int64_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      uint32_t dim = r.u32();
      if (dim > (1u << 24)) throw FormatError("checkpoint: implausible dimension");
      a.shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    a.data.resize(static_cast<size_t>(n));
    for (int64_t d = 0; d < n; ++d) a.data[static_cast<size_t>(d)] = r.f64();
    map.arrays.push_back(std::move(a));
  }
  if (r.pos != bytes.size() - 4) throw FormatError("checkpoint: trailing bytes");

  try {
    ckpt.gen_params = Generator::from_params(map.params_with_prefix("gen", true)).params;
    ckpt.disc_params = Discriminator::from_params(map.params_with_prefix("disc", true)).params;
    ckpt.feat_params = FeatureNet::from_params(map.params_with_prefix("feat", false)).params;
    ckpt.gen_opt = map.opt_with_prefix("opt.gen", ckpt.gen_params);
    ckpt.disc_opt = map.opt_with_prefix("opt.disc", ckpt.disc_params);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  uint64_t hi = static_cast<uint64_t>(map.get("rng.hi").data.at(0));
  uint64_t lo = static_cast<uint64_t>(map.get("rng.lo").data.at(0));
  ckpt.rng_state = (hi << 32) | lo;
  ckpt.round = static_cast<int64_t>(map.get("round").data.at(0));
  ckpt.filter.radius = static_cast<int>(map.get("filter.radius").data.at(0));
  ckpt.filter.eps = map.get("filter.eps").data.at(0);
  return ckpt;
}

void write_checkpoint_file(const std::string& path, const Checkpoint& ckpt) {
  write_file(path, save_checkpoint(ckpt));
}

Checkpoint read_checkpoint_file(const std::string& path) {
  return load_checkpoint(read_file(path));
}

}  // namespace rainlab
