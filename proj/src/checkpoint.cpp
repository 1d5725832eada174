#include "kgforge/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace kgforge {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  std::array<char, sizeof(T)> bytes{};
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  static_assert(std::is_integral_v<T>);
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError("checkpoint truncated");
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(bytes[i]) << (8 * i);
  return static_cast<T>(u);
}

void put_reals(std::ostream& out, std::span<const double> values) {
  for (double v : values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

void get_reals(std::istream& in, std::span<double> values) {
  for (double& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
}

void put_string(std::ostream& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get_le<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("checkpoint truncated");
  return s;
}

constexpr char kMagic[4] = {'K', 'G', 'F', 'G'};

}  // namespace

void write_checkpoint(std::ostream& out, const EmbeddingTable& table, const Vocab& vocab) {
  require(vocab.n_entities() == table.n_entities() && vocab.n_relations() == table.n_relations(),
          "checkpoint: vocab does not match table");
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(table.type()));
  put_le<std::uint8_t>(out, table.kind().joint ? 1 : 0);
  put_le<std::uint64_t>(out, table.n_entities());
  put_le<std::uint64_t>(out, table.n_relations());
  put_le<std::uint64_t>(out, table.dim());
  put_reals(out, table.entity_data());
  put_reals(out, table.relation_data(RelationModule::tri));
  if (table.kind().joint) put_reals(out, table.relation_data(RelationModule::bi));
  for (const auto& name : vocab.entity_names()) put_string(out, name);
  for (const auto& name : vocab.relation_names()) put_string(out, name);
  if (!out) throw DataError("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError("checkpoint: bad magic");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto type_byte = get_le<std::uint8_t>(in);
  if (type_byte > 2) throw DataError("checkpoint: unknown model kind");
  const auto joint = get_le<std::uint8_t>(in);
  const auto n_e = get_le<std::uint64_t>(in);
  const auto n_r = get_le<std::uint64_t>(in);
  const auto d = get_le<std::uint64_t>(in);
  if (n_e == 0 || n_r == 0 || d == 0) throw DataError("checkpoint: zero dimension");

  Checkpoint ck{EmbeddingTable(ModelKind{static_cast<ModelType>(type_byte), joint != 0}, n_e,
                               n_r, d),
                Vocab{}};
  get_reals(in, ck.table.entity_data());
  get_reals(in, ck.table.relation_data(RelationModule::tri));
  if (joint != 0) get_reals(in, ck.table.relation_data(RelationModule::bi));
  for (std::uint64_t i = 0; i < n_e; ++i) {
    if (ck.vocab.intern_entity(get_string(in)) != static_cast<EntityId>(i)) {
      throw DataError("checkpoint: duplicate entity name");
    }
  }
  for (std::uint64_t i = 0; i < n_r; ++i) {
    if (ck.vocab.intern_relation(get_string(in)) != static_cast<RelationId>(i)) {
      throw DataError("checkpoint: duplicate relation name");
    }
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const EmbeddingTable& table,
                     const Vocab& vocab) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, table, vocab);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  return read_checkpoint(in);
}

}  // namespace kgforge
