#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "contact_kam/errors.hpp"
#include "contact_kam/model.hpp"
#include "contact_kam/variational.hpp"

namespace contact_kam::cli {

// Unreadable, malformed or out-of-range configuration (exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

struct Numerics {
  LaxParams lax;
  double tol = 1e-9;           // weak KAM stopping tolerance
  double t_max = 200.0;
  double window = 1.0;
  double char_tol = 0.0;       // <= 0: 5 dx
  double class_tol = 1e-2;
  double accept_tol = 1e-2;
  std::uint64_t seed = 12345;
  double h = 1e-3;             // ODE step
  std::size_t thin = 10;       // orbit CSV thinning
  bool svg = false;
  double manifold_offset = 1e-6;
  double evidence_span = 20.0;
  double classify_high = 1.0;  // seeds converging to the maximal backward / minimal forward solutions
  double classify_low = -1.0;
  std::size_t pair_count = 24;
  std::size_t verify_n = 64;
  std::size_t verify_trials = 100;
};

struct RunConfig {
  std::filesystem::path path;
  std::string text;  // raw bytes, hashed into the manifest
  std::optional<ContactModel> model;
  std::string model_kind;
  std::size_t n = 512;
  Numerics num;
  std::filesystem::path out = "out";
  std::vector<std::string> notices;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& origin = {});

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace contact_kam::cli
