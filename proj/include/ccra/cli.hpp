#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "ccra/pipeline.hpp"

namespace ccra::cli {

// Stable exit-code contract for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;

struct ForwardArgs {
  std::string config_path;
  std::string out_dir;
  std::string visual_path;  // empty: synthesize from the seed
  std::string text_path;    // empty: synthesize from the seed
  std::optional<std::uint64_t> seed;
};

struct GradCheckArgs {
  std::string config_path;
  double eps = 1e-5;
  double tolerance = 1e-4;
  std::optional<std::uint64_t> seed;
};

struct HeatmapArgs {
  std::string map_path;
  std::string select = "patch";  // "patch" for a 1-D map, a layer index for a 2-D map
  std::string out_path;
  std::string format = "pgm";  // pgm | csv
};

struct VariantsArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

struct ParamsArgs {
  std::string config_path;
};

int cmd_forward(const ForwardArgs& args, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradCheckArgs& args, std::ostream& out, std::ostream& err);
int cmd_heatmap(const HeatmapArgs& args, std::ostream& out, std::ostream& err);
int cmd_variants(const VariantsArgs& args, std::ostream& out, std::ostream& err);
int cmd_params(const ParamsArgs& args, std::ostream& out, std::ostream& err);

/// Trace artifacts shared by `forward` and `variants`: fused.ct, projected.ct,
/// logits.ct, wlp.ct, wp.ct plus wl.csv, wp.csv, alpha.csv.
void write_trace_files(const std::string& dir, const ForwardTrace& trace);

}  // namespace ccra::cli
