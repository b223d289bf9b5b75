#include "ccra/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <vector>

#include "ccra/errors.hpp"
#include "ccra/heatmap.hpp"
#include "ccra/run_config.hpp"
#include "ccra/tensor_io.hpp"

namespace ccra::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Seed precedence: flag > CCRA_SEED env var > config file.
CcraConfig load_config(const std::string& path, const std::optional<std::uint64_t>& flag_seed) {
  CcraConfig cfg = parse_run_config_file(path);
  if (const char* env = std::getenv("CCRA_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("CCRA_SEED is not an integer: '") + env + "'");
    }
  }
  if (flag_seed) cfg.seed = *flag_seed;
  return cfg;
}

int exit_code_for(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfigError;
  return kExitIoError;
}

int exit_code_for(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  return kExitIoError;
}

VisualStack visual_from_tensor(const Tensor& t, const CcraConfig& cfg) {
  if (t.ndim() != 3 || t.extent(0) != cfg.layer_count || t.extent(1) != cfg.patch_count ||
      t.extent(2) != cfg.feature_dim) {
    throw ShapeMismatch("visual tensor shape " + shape_string(t) + " does not match config L x N x d");
  }
  VisualStack vs;
  const std::size_t stride = cfg.patch_count * cfg.feature_dim;
  for (std::size_t l = 0; l < cfg.layer_count; ++l) {
    std::vector<double> data(t.data() + l * stride, t.data() + (l + 1) * stride);
    vs.layers.emplace_back(std::vector<std::size_t>{cfg.patch_count, cfg.feature_dim},
                           std::move(data));
  }
  return vs;
}

std::string csv_column(const char* header, const Tensor& v) {
  std::string out = header;
  out.push_back('\n');
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += fmt(v[i]);
    out.push_back('\n');
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

}  // namespace

void write_trace_files(const std::string& dir, const ForwardTrace& trace) {
  fs::create_directories(dir);
  const fs::path base(dir);
  write_tensor_file((base / "fused.ct").string(), trace.features_fused);
  write_tensor_file((base / "projected.ct").string(), trace.projected);
  write_tensor_file((base / "logits.ct").string(), trace.logits);
  write_tensor_file((base / "wlp.ct").string(), trace.layer_patch_map);
  write_tensor_file((base / "wp.ct").string(), trace.patch_weights);

  std::string wl = "raw,smoothed\n";
  for (std::size_t l = 0; l < trace.layer_weights_raw.size(); ++l) {
    wl += fmt(trace.layer_weights_raw[l]) + "," + fmt(trace.layer_weights_smoothed[l]) + "\n";
  }
  write_text_file((base / "wl.csv").string(), wl);
  write_text_file((base / "wp.csv").string(), csv_column("wp", trace.patch_weights));
  write_text_file((base / "alpha.csv").string(), csv_column("alpha", trace.alpha));
}

int cmd_forward(const ForwardArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const CcraConfig cfg = load_config(args.config_path, args.seed);
    TrainSample synth = synth_inputs(cfg, cfg.seed);

    TextEmbeddings text = synth.text;
    VisualStack visual = synth.visual;
    if (!args.text_path.empty()) {
      const Tensor t = read_tensor_file(args.text_path);
      if (t.ndim() != 2 || t.rows() != cfg.token_count || t.cols() != cfg.feature_dim) {
        throw ShapeMismatch("text tensor shape " + shape_string(t) +
                            " does not match config T x d");
      }
      text.tokens = t;
    }
    if (!args.visual_path.empty()) {
      visual = visual_from_tensor(read_tensor_file(args.visual_path), cfg);
    }

    const CcraParams params = make_params(cfg);
    const ForwardTrace trace = variant_forward(cfg.variant, text, visual, params, cfg);
    write_trace_files(args.out_dir, trace);

    out << "variant=" << variant_name(cfg.variant) << " L=" << cfg.layer_count
        << " N=" << cfg.patch_count << " d=" << cfg.feature_dim << " T=" << cfg.token_count
        << " d_hidden=" << cfg.hidden_dim << " d_llm=" << cfg.llm_dim << " V=" << cfg.vocab_size
        << " | fused " << trace.features_fused.rows() << "x" << trace.features_fused.cols()
        << " projected " << trace.projected.rows() << "x" << trace.projected.cols() << " logits "
        << trace.logits.size() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    return exit_code_for(e, err);
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

int cmd_gradcheck(const GradCheckArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const CcraConfig cfg = load_config(args.config_path, args.seed);
    if (!(args.eps > 0.0)) throw ConfigError("eps must be positive");
    if (args.tolerance < 0.0) throw ConfigError("tolerance must be nonnegative");

    const GradCheckReport report = gradient_check(cfg, args.eps, args.tolerance);
    char buf[64];
    std::vector<std::string> failing;
    for (const auto& group : report.groups) {
      std::snprintf(buf, sizeof(buf), "%s %.6e", group.name.c_str(), group.max_rel_err);
      out << buf << "\n";
      if (!(group.max_rel_err < args.tolerance)) failing.push_back(group.name);
    }
    if (!failing.empty()) {
      err << "gradcheck failed for:";
      for (const auto& name : failing) err << " " << name;
      err << " (tolerance " << args.tolerance << ")\n";
      return kExitCheckFailed;
    }
    return kExitOk;
  } catch (const Error& e) {
    return exit_code_for(e, err);
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

int cmd_heatmap(const HeatmapArgs& args, std::ostream&, std::ostream& err) {
  try {
    const Tensor map = read_tensor_file(args.map_path);
    Tensor flat;
    if (args.select == "patch") {
      if (map.ndim() != 1) {
        throw ShapeMismatch("selector 'patch' needs a 1-D map, got " + shape_string(map));
      }
      flat = map;
    } else {
      std::size_t layer = 0;
      try {
        std::size_t pos = 0;
        const long long v = std::stoll(args.select, &pos);
        if (pos != args.select.size() || v < 0) throw std::invalid_argument("bad");
        layer = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        throw ConfigError("selector must be 'patch' or a layer index, got '" + args.select + "'");
      }
      if (map.ndim() != 2) {
        throw ShapeMismatch("layer selector needs a 2-D map, got " + shape_string(map));
      }
      if (layer >= map.rows()) {
        throw ShapeMismatch("layer index " + std::to_string(layer) + " out of range for " +
                            shape_string(map));
      }
      flat = ops::slice_rows(map, layer, 1).reshaped({map.cols()});
    }

    const Tensor square = to_square(flat);
    if (args.format == "pgm") {
      write_text_file(args.out_path, render_pgm(square));
    } else if (args.format == "csv") {
      write_text_file(args.out_path, render_csv_grid(square));
    } else {
      throw ConfigError("format must be pgm or csv, got '" + args.format + "'");
    }
    return kExitOk;
  } catch (const Error& e) {
    return exit_code_for(e, err);
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

int cmd_variants(const VariantsArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const CcraConfig cfg = load_config(args.config_path, args.seed);
    const TrainSample synth = synth_inputs(cfg, cfg.seed);
    const CcraParams params = make_params(cfg);

    const Variant order[] = {Variant::kPai, Variant::kDecoupled, Variant::kShuffled};
    std::vector<ForwardTrace> traces;
    for (Variant v : order) {
      traces.push_back(variant_forward(v, synth.text, synth.visual, params, cfg));
      write_trace_files((fs::path(args.out_dir) / variant_name(v)).string(), traces.back());
    }
    for (std::size_t a = 0; a < traces.size(); ++a) {
      for (std::size_t b = a; b < traces.size(); ++b) {
        out << variant_name(order[a]) << " vs " << variant_name(order[b]) << ": "
            << fmt(max_abs_diff(traces[a].features_fused, traces[b].features_fused)) << "\n";
      }
    }
    return kExitOk;
  } catch (const Error& e) {
    return exit_code_for(e, err);
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

int cmd_params(const ParamsArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const CcraConfig cfg = load_config(args.config_path, std::nullopt);
    const ParameterCounts counts = count_parameters(cfg);
    for (const auto& [name, n] : counts.groups) {
      out << name << " " << n << "\n";
    }
    out << "total " << counts.total << "\n";
    return kExitOk;
  } catch (const Error& e) {
    return exit_code_for(e, err);
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

}  // namespace ccra::cli
