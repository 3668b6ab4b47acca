#include "crystab/workbench/hashing.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <memory>

namespace crystab::workbench {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw Error("sha256: digest failed");
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kDigits[digest[i] >> 4]);
    hex.push_back(kDigits[digest[i] & 0xf]);
  }
  return hex;
}

std::string config_hash(const RunConfig& config) { return sha256_hex(config.canonical_json()); }

std::string ground_state_key(const IonDensity& d, double e, double Z, int cutoff) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "|e=%.17g|Z=%.17g|M=%d", e, Z, cutoff);
  return sha256_hex(density_spec_json(d) + buf);
}

}  // namespace crystab::workbench
