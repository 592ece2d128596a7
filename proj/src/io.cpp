#include "vortexlab/io.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "version.hpp"
#include "vortexlab/errors.hpp"

namespace vortexlab::io {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // also folds -0
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw IoError("format_number: conversion failed");
  return std::string(buf.data(), end);
}

Csv::Csv(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

Csv& Csv::row(std::initializer_list<double> values) { return row(std::span<const double>(values.begin(), values.size())); }

Csv& Csv::row(std::span<const double> values) {
  if (values.size() != columns_) throw IoError("csv: row width does not match the header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text_ += ',';
    text_ += format_number(values[i]);
  }
  text_ += '\n';
  ++rows_;
  return *this;
}

Csv curves_csv(std::span<const vortex::CurveSet> sets) {
  Csv csv({"t", "component_id", "vertex_index", "x", "y", "z"});
  for (const auto& s : sets)
    for (std::size_t c = 0; c < s.components.size(); ++c) {
      std::size_t v = 0;
      for (const auto& piece : s.components[c].pieces)
        for (const auto& x : piece.points)
          csv.row({s.t, static_cast<double>(c), static_cast<double>(v++), x[0], x[1], x[2]});
    }
  return csv;
}

Csv timeline_csv(std::span<const vortex::TimelineRow> rows) {
  Csv csv({"t", "count", "parity"});
  for (const auto& r : rows) csv.row({r.t, static_cast<double>(r.count), static_cast<double>(r.parity)});
  return csv;
}

Csv separation_csv(std::span<const vortex::CurveSet> sets) {
  Csv csv({"t", "d"});
  for (const auto& s : sets)
    if (const auto d = vortex::min_separation(s)) csv.row({s.t, *d});
  return csv;
}

Csv observables_csv(std::span<const evolve::Observables> series) {
  Csv csv({"t", "mass", "gl_energy"});
  for (const auto& o : series) csv.row({o.t, o.mass, o.gl_energy});
  return csv;
}

nlohmann::json to_json(const vortex::Event& e) {
  nlohmann::json j;
  j["time"] = e.time;
  j["kind"] = scenarios::to_string(e.kind);
  j["countBefore"] = e.count_before;
  j["countAfter"] = e.count_after;
  j["parityBefore"] = e.parity_before;
  j["parityAfter"] = e.parity_after;
  j["fit"] = {{"exponent", e.exponent},
              {"prefactor", e.prefactor},
              {"window", {e.fit_window_min, e.fit_window_max}},
              {"residual", e.fit_rms},
              {"points", e.fit_points}};
  j["exclusion"] = {e.exclusion_begin, e.exclusion_end};
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

nlohmann::json events_json(std::span<const vortex::Event> events) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : events) arr.push_back(to_json(e));
  return arr;
}

void write_file(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string s{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw IoError("read failed: " + path.string());
  return s;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }  // nlohmann objects keep keys sorted

// --- snapshots -------------------------------------------------------------------------

namespace {

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <class U>
U get_le(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw IoError("snapshot: truncated data");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return v;
}

constexpr std::size_t kHeaderBytes = 8 + 3 * 4 + 3 * 8 + 8;

}  // namespace

std::string encode_snapshot(const ComplexField& u, double t) {
  const BoxSpec& box = u.box();
  std::string out;
  out.reserve(kHeaderBytes + 8 * u.size());
  out.append(kSnapshotMagic);
  for (int n : box.points) put_le(out, static_cast<std::uint32_t>(n));
  for (double L : box.length) put_le(out, std::bit_cast<std::uint64_t>(L));
  put_le(out, std::bit_cast<std::uint64_t>(t));
  for (const cplx& z : u.values()) {
    put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(z.real())));
    put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(z.imag())));
  }
  return out;
}

Snapshot decode_snapshot(std::string_view bytes, const nlohmann::json& sidecar) {
  if (bytes.substr(0, kSnapshotMagic.size()) != kSnapshotMagic) throw IoError("snapshot: bad magic");
  std::size_t pos = kSnapshotMagic.size();
  BoxSpec box;
  if (sidecar.contains("box")) box = box_from_json(sidecar["box"]);
  std::array<int, 3> points{};
  for (auto& n : points) n = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  for (auto& L : box.length) L = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  box.points = points;
  const double t = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  try {
    box.validate();
  } catch (const std::exception& e) {
    throw IoError(std::string("snapshot: invalid box: ") + e.what());
  }
  if (bytes.size() != kHeaderBytes + 8 * box.size()) throw IoError("snapshot: payload size does not match the header");
  Snapshot s{ComplexField(box), t};
  for (auto& z : s.field.values()) {
    const float re = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
    const float im = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
    z = {re, im};
  }
  return s;
}

nlohmann::json box_json(const BoxSpec& box) {
  return {{"length", box.length}, {"points", box.points}, {"periodic", box.periodic}, {"offset", box.offset}};
}

BoxSpec box_from_json(const nlohmann::json& j) {
  BoxSpec box;
  box.length = j.at("length").get<std::array<double, 3>>();
  box.points = j.at("points").get<std::array<int, 3>>();
  box.periodic = j.value("periodic", true);
  if (j.contains("offset")) box.offset = j["offset"].get<std::array<double, 3>>();
  return box;
}

void write_snapshot(const fs::path& stem, const ComplexField& u, double t, const nlohmann::json& config) {
  fs::path bin = stem, side = stem;
  bin += ".bin";
  side += ".json";
  write_file(bin, encode_snapshot(u, t));
  const nlohmann::json meta = {{"format", std::string(kSnapshotMagic)},
                               {"box", box_json(u.box())},
                               {"t", t},
                               {"precision", "complex64"},
                               {"config", config}};
  write_file(side, dump(meta));
}

Snapshot read_snapshot(const fs::path& bin_path) {
  fs::path side = bin_path;
  side.replace_extension(".json");
  nlohmann::json meta;
  if (fs::exists(side)) {
    try {
      meta = nlohmann::json::parse(read_file(side));
    } catch (const nlohmann::json::exception& e) {
      throw IoError("snapshot sidecar " + side.string() + ": " + e.what());
    }
  }
  return decode_snapshot(read_file(bin_path), meta);
}

// --- manifests --------------------------------------------------------------------------

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xF];
  return s;
}

nlohmann::json versions() {
  return {{"vortexlab", VORTEXLAB_VERSION},
          {"compiler", VORTEXLAB_COMPILER},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                        std::to_string(BOOST_VERSION % 100)},
          {"fftw", std::string(fftw_version)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

}  // namespace vortexlab::io
