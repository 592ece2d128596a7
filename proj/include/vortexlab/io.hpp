#pragma once

// Artifact formats shared by the command-line front-end and the plotting
// scripts. CSV files use '.' as decimal separator, '\n' line endings and a
// header row; numbers are written in shortest round-trip form.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vortexlab/evolve.hpp"
#include "vortexlab/grid.hpp"
#include "vortexlab/vortex.hpp"

namespace vortexlab::io {

namespace fs = std::filesystem;

/// Shortest representation that reads back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_number(double x);

/// Row-oriented CSV builder.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);

  Csv& row(std::initializer_list<double> values);
  Csv& row(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  const std::string& str() const { return text_; }

 private:
  std::size_t columns_ = 0;
  std::size_t rows_ = 0;
  std::string text_;
};

/// t, component_id, vertex_index, x, y, z (one row per polyline vertex; pieces of
/// merged components are concatenated).
Csv curves_csv(std::span<const vortex::CurveSet> sets);
/// t, count, parity
Csv timeline_csv(std::span<const vortex::TimelineRow> rows);
/// t, d (rows only where two or more components exist)
Csv separation_csv(std::span<const vortex::CurveSet> sets);
/// t, mass, gl_energy
Csv observables_csv(std::span<const evolve::Observables> series);

nlohmann::json to_json(const vortex::Event& event);
nlohmann::json events_json(std::span<const vortex::Event> events);

/// Writes the whole buffer or throws IoError; parent directories are created.
void write_file(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

/// Deterministic JSON text (sorted keys, 2-space indent, trailing newline).
std::string dump(const nlohmann::json& j);

// --- binary snapshots --------------------------------------------------------
//
// Little-endian layout:
//   char[8]    magic "VXLSNAP1"
//   uint32[3]  points per axis
//   float64[3] box lengths
//   float64    t
//   then prod(points) pairs of float32 (re, im), row-major with z fastest.

inline constexpr std::string_view kSnapshotMagic = "VXLSNAP1";

std::string encode_snapshot(const ComplexField& u, double t);

struct Snapshot {
  ComplexField field;
  double t = 0.0;
};

/// The sidecar (if any) supplies periodicity and offset; without it the box is periodic, unshifted.
Snapshot decode_snapshot(std::string_view bytes, const nlohmann::json& sidecar = {});

/// Writes `<stem>.bin` and `<stem>.json`; the sidecar records box, time and the config.
void write_snapshot(const fs::path& stem, const ComplexField& u, double t, const nlohmann::json& config);
Snapshot read_snapshot(const fs::path& bin_path);

nlohmann::json box_json(const BoxSpec& box);
BoxSpec box_from_json(const nlohmann::json& j);

// --- manifests ---------------------------------------------------------------

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t h);

/// Versions of the library and of the third-party components it was built with.
nlohmann::json versions();

}  // namespace vortexlab::io
