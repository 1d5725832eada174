#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kgforge {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Which entity slot of a triple is replaced (sampling) or ranked (evaluation).
enum class Side : std::uint8_t { head, tail };

inline EntityId entity_at(const Triple& t, Side side) {
  return side == Side::head ? t.head : t.tail;
}

inline Triple with_entity(Triple t, Side side, EntityId e) {
  (side == Side::head ? t.head : t.tail) = e;
  return t;
}

/// Raised when a caller breaks a documented precondition (dimension
/// mismatch, zero sizes, asking a non-joint model for its pair module).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or missing input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure during training (non-finite loss, score or update).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(what);
}

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();
void log_info(std::string_view message);
void log_debug(std::string_view message);

}  // namespace kgforge
