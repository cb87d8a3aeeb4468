#include "manifest.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "epsinas/error.hpp"
#include "json.hpp"

namespace epsinas::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("sha256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error("sha256 final failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += kHex[md[i] >> 4];
      out += kHex[md[i] & 0xf];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for hashing");
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_bytes(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "epsinas";
  j["version"] = kVersion;
  j["subcommand"] = subcommand;
  j["argv"] = argv;
  nlohmann::ordered_json f = nlohmann::ordered_json::object();
  for (const auto& [k, v] : flags) f[k] = v;
  j["flags"] = f;
  j["seed"] = seed;
  auto files = [](const std::vector<std::string>& paths) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : paths) arr.push_back({{"path", p}, {"sha256", sha256_file(p)}});
    return arr;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
  const std::string text = to_json();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
}

std::string manifest_path_for(const std::string& output) {
  std::filesystem::path p(output);
  p.replace_extension(".manifest.json");
  return p.string();
}

}  // namespace epsinas::cli
