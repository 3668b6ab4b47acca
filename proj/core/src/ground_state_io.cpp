#include <cstdint>
#include <fstream>

#include "crystab/ground_state.hpp"
#include "json.hpp"

#ifndef CRYSTAB_VERSION
#define CRYSTAB_VERSION "unknown"
#endif

namespace crystab {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

void write_coeffs(std::ofstream& out, const CVector& c) {
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double parts[2] = {c[i].real(), c[i].imag()};
    out.write(reinterpret_cast<const char*>(parts), sizeof(parts));
  }
}

bool read_coeffs(std::ifstream& in, CVector& c) {
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    double parts[2];
    if (!in.read(reinterpret_cast<char*>(parts), sizeof(parts))) return false;
    c[i] = cplx(parts[0], parts[1]);
  }
  return true;
}

}  // namespace

void save_ground_state(const GroundState& gs, const std::filesystem::path& stem, const std::string& key) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  nlohmann::ordered_json j;
  j["version"] = CRYSTAB_VERSION;
  j["key"] = key;
  j["cutoff"] = gs.basis().cutoff();
  j["e"] = gs.e;
  j["Z"] = gs.Z;
  j["omega0"] = gs.omega0;
  j["residual"] = gs.residual;
  j["energy"] = gs.energy;
  j["iterations"] = gs.iterations;
  j["density"] = gs.density_spec;
  j["coefficients"] = with_suffix(stem, ".bin").filename().string();
  {
    std::ofstream out(with_suffix(stem, ".json"), std::ios::binary);
    if (!out) throw InvalidArgument("save_ground_state: cannot write " + stem.string());
    out << j.dump(2) << '\n';
  }
  std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw InvalidArgument("save_ground_state: cannot write " + stem.string());
  write_coeffs(bin, gs.psi0.coeffs());
  write_coeffs(bin, gs.phi0.coeffs());
}

std::optional<GroundState> load_ground_state(const std::filesystem::path& stem, const std::string& key) {
  std::ifstream meta(with_suffix(stem, ".json"));
  std::ifstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!meta || !bin) return std::nullopt;
  nlohmann::json j = nlohmann::json::parse(meta, nullptr, false);
  if (j.is_discarded() || j.value("key", std::string()) != key) return std::nullopt;
  if (j.value("version", std::string()) != CRYSTAB_VERSION) return std::nullopt;
  try {
    const BasisPtr basis = make_basis(j.at("cutoff").get<int>());
    GroundState gs;
    gs.e = j.at("e").get<double>();
    gs.Z = j.at("Z").get<double>();
    gs.omega0 = j.at("omega0").get<double>();
    gs.residual = j.at("residual").get<double>();
    gs.energy = j.at("energy").get<double>();
    gs.iterations = j.at("iterations").get<int>();
    gs.density_spec = j.at("density").get<std::string>();
    CVector psi(static_cast<Eigen::Index>(basis->size())), phi(psi.size());
    if (!read_coeffs(bin, psi) || !read_coeffs(bin, phi)) return std::nullopt;
    gs.psi0 = FourierField(basis, psi);
    gs.phi0 = FourierField(basis, phi);
    return gs;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

}  // namespace crystab
