#include "muskat/snapshot.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace muskat {

static_assert(std::endian::native == std::endian::little, "binary snapshots assume a little-endian host");

void write_snapshot(std::ostream& out, const GridField& f, SnapshotEncoding enc) {
  out << "muskat-field " << kSnapshotFormatVersion << "\n"
      << std::setprecision(17) << "nodes " << f.n() << "\n"
      << "spacing " << f.spacing() << "\n"
      << "extent " << f.extent() << "\n"
      << "policy " << to_string(f.policy()) << "\n"
      << "time " << f.time() << "\n"
      << "encoding " << (enc == SnapshotEncoding::binary ? "binary" : "csv") << "\n"
      << "end\n";
  const auto v = f.values();
  if (enc == SnapshotEncoding::binary) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  } else {
    const int N = f.n();
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) out << (j ? "," : "") << v[static_cast<std::size_t>(i) * N + j];
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("snapshot write failed");
}

void write_snapshot(const std::filesystem::path& path, const GridField& f, SnapshotEncoding enc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_snapshot(out, f, enc);
}

GridField read_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("snapshot: empty input");
  {
    std::istringstream magic(line);
    std::string word;
    int version = 0;
    magic >> word >> version;
    if (word != "muskat-field") throw std::runtime_error("snapshot: bad magic line");
    if (version != kSnapshotFormatVersion) throw std::runtime_error("snapshot: unsupported version " + std::to_string(version));
  }
  std::map<std::string, std::string> header;
  while (std::getline(in, line) && line != "end") {
    std::istringstream kv(line);
    std::string key;
    std::string value;
    kv >> key >> value;
    header[key] = value;
  }
  if (line != "end") throw std::runtime_error("snapshot: header not terminated");
  auto need = [&](const char* key) {
    const auto it = header.find(key);
    if (it == header.end()) throw std::runtime_error(std::string("snapshot: missing header field ") + key);
    return it->second;
  };
  GridGeometry g;
  g.nodes = std::stoi(need("nodes"));
  g.extent = std::stod(need("extent"));
  g.policy = parse_boundary_policy(need("policy"));
  const double spacing = std::stod(need("spacing"));
  if (std::abs(spacing - g.spacing()) > 1e-12 * spacing) throw std::runtime_error("snapshot: spacing inconsistent with extent");
  const double time = std::stod(need("time"));
  const std::string enc = need("encoding");
  std::vector<double> v(g.size());
  if (enc == "binary") {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double))) throw std::runtime_error("snapshot: truncated payload");
  } else if (enc == "csv") {
    for (int i = 0; i < g.nodes; ++i) {
      if (!std::getline(in, line)) throw std::runtime_error("snapshot: truncated csv payload");
      std::istringstream row(line);
      std::string cell;
      for (int j = 0; j < g.nodes; ++j) {
        if (!std::getline(row, cell, ',')) throw std::runtime_error("snapshot: short csv row");
        v[static_cast<std::size_t>(i) * g.nodes + j] = std::stod(cell);
      }
    }
  } else {
    throw std::runtime_error("snapshot: unknown encoding " + enc);
  }
  return GridField(g, std::move(v), time);
}

GridField read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot " + path.string());
  return read_snapshot(in);
}

}  // namespace muskat
