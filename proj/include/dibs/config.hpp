/*
 * config.hpp
 *
 * Configuration files: a JSON schema describing templates (dynamics,
 * domains, gains, specification sets), the instance wiring (explicit or
 * the chain-of-pairs expansion) and global parameters.
 */

#ifndef DIBS_CONFIG_HPP_
#define DIBS_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>

#include "dibs/network_spec.hpp"

namespace dibs {

struct LoadedConfig {
  NetworkSpec net;
  std::map<std::string, Vec> x0;          /* explicit initial states */
  std::map<std::string, Box> x0_sample;   /* per-template sampling boxes */
  std::uint64_t x0_seed = 1;
  std::uint64_t hash = 0; /* over the canonical config text */
};

LoadedConfig load_config(const std::string& path);
LoadedConfig parse_config(const std::string& text);

std::uint64_t fnv1a64(const void* data, std::size_t len);

}  // namespace dibs

#endif
