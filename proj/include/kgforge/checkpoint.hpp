#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "kgforge/kgdata.hpp"
#include "kgforge/model.hpp"

namespace kgforge {

// Binary layout, little-endian throughout:
//   "KGFG"            4 bytes magic
//   version           u32 (= kCheckpointVersion)
//   model kind        u8  (0 distmult, 1 complex, 2 simple)
//   joint flag        u8
//   n_entities        u64
//   n_relations       u64
//   d                 u64
//   entity matrix     f64[n_entities * entity_width]
//   relation_tri      f64[n_relations * relation_width]
//   relation_bi       f64[n_relations * relation_width]   (joint only)
//   entity names      n_entities  x (u32 byte length, UTF-8 bytes)
//   relation names    n_relations x (u32 byte length, UTF-8 bytes)
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EmbeddingTable table;
  Vocab vocab;
};

void write_checkpoint(std::ostream& out, const EmbeddingTable& table, const Vocab& vocab);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const EmbeddingTable& table,
                     const Vocab& vocab);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kgforge
