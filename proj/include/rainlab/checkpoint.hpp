#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rainlab/guided_filter.hpp"
#include "rainlab/model.hpp"
#include "rainlab/nn.hpp"

namespace rainlab {

// Full training state: every parameter set, both optimizer states, the batch
// sampler position, the round counter and the filter configuration used to
// build the data the models were trained on.
struct Checkpoint {
  uint16_t version = 1;
  ParamSet gen_params, disc_params, feat_params;
  AdamState gen_opt, disc_opt;
  uint64_t rng_state = 0;
  int64_t round = 0;
  FilterParams filter;
};

// Binary layout: "RLCK" magic, u16 version, u32 array count, then named
// arrays (u32 name length, name bytes, u32 rank, u32 dims..., f64 payload),
// all little-endian, closed by a CRC32 of every preceding byte.
std::vector<uint8_t> save_checkpoint(const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::vector<uint8_t>& bytes);

void write_checkpoint_file(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint_file(const std::string& path);

uint32_t crc32(const uint8_t* data, size_t len);

}  // namespace rainlab
