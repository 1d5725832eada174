#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kgforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by the kgforge binary and the tests. Normal output
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// An existing directory `name`, else KGFORGE_DATA_DIR/name (or the
/// variable itself when `name` is empty).
std::optional<std::filesystem::path> resolve_data_dir(const std::string& name);

}  // namespace kgforge::cli
