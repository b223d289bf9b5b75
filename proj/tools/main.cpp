#include <iostream>

#include <CLI11.hpp>

#include "ccra/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"CCRA attention stack: forward passes, gradient checks, variant comparison,\n"
               "heatmap export and parameter accounting"};
  app.require_subcommand(1);

  ccra::cli::ForwardArgs forward_args;
  CLI::App* forward = app.add_subcommand("forward", "Run a forward pass and export the trace");
  forward->add_option("--config", forward_args.config_path, "Run config file")->required();
  forward->add_option("--out", forward_args.out_dir, "Output directory")->required();
  forward->add_option("--visual", forward_args.visual_path, "Visual stack tensor (L x N x d .ct)");
  forward->add_option("--text", forward_args.text_path, "Text embeddings tensor (T x d .ct)");
  forward->add_option("--seed", forward_args.seed, "Seed override (flag > CCRA_SEED > file)");

  ccra::cli::GradCheckArgs gradcheck_args;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  gradcheck->add_option("--config", gradcheck_args.config_path, "Run config file")->required();
  gradcheck->add_option("--eps", gradcheck_args.eps, "Finite-difference step");
  gradcheck->add_option("--tol", gradcheck_args.tolerance, "Max relative error per group");
  gradcheck->add_option("--seed", gradcheck_args.seed, "Seed override");

  ccra::cli::HeatmapArgs heatmap_args;
  CLI::App* heatmap = app.add_subcommand("heatmap", "Render an attention map as PGM or CSV");
  heatmap->add_option("--map", heatmap_args.map_path, "Attention map tensor (.ct)")->required();
  heatmap->add_option("--select", heatmap_args.select,
                      "'patch' for a 1-D map or a layer index into a 2-D map");
  heatmap->add_option("--out", heatmap_args.out_path, "Output file")->required();
  heatmap->add_option("--format", heatmap_args.format, "pgm or csv");

  ccra::cli::VariantsArgs variants_args;
  CLI::App* variants =
      app.add_subcommand("variants", "Run pai/decoupled/shuffled on the same input");
  variants->add_option("--config", variants_args.config_path, "Run config file")->required();
  variants->add_option("--out", variants_args.out_dir, "Output directory")->required();
  variants->add_option("--seed", variants_args.seed, "Seed override");

  ccra::cli::ParamsArgs params_args;
  CLI::App* params = app.add_subcommand("params", "Report per-group parameter counts");
  params->add_option("--config", params_args.config_path, "Run config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ccra::cli::kExitOk : ccra::cli::kExitConfigError;
  }

  if (app.got_subcommand(forward)) {
    return ccra::cli::cmd_forward(forward_args, std::cout, std::cerr);
  }
  if (app.got_subcommand(gradcheck)) {
    return ccra::cli::cmd_gradcheck(gradcheck_args, std::cout, std::cerr);
  }
  if (app.got_subcommand(heatmap)) {
    return ccra::cli::cmd_heatmap(heatmap_args, std::cout, std::cerr);
  }
  if (app.got_subcommand(variants)) {
    return ccra::cli::cmd_variants(variants_args, std::cout, std::cerr);
  }
  if (app.got_subcommand(params)) {
    return ccra::cli::cmd_params(params_args, std::cout, std::cerr);
  }
  return ccra::cli::kExitConfigError;
}
