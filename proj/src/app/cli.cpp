#include "eegart/app/cli.hpp"

#include <optional>

#include "CLI11.hpp"
#include "eegart/app/pipeline.hpp"
#include "eegart/app/service.hpp"
#include "eegart/signal/recording_io.hpp"
#include "eegart/util/binary_io.hpp"

namespace eegart::app {

namespace {

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, j.dump(2) + "\n");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

signal::Recording load_rec_with_id(const fs::path& path) {
  auto rec = load_recording(path);
  if (rec.id.empty()) rec.id = recording_id(path);
  return rec;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"EEG artifact detection and localization"};
  app.require_subcommand(1);

  // synth
  std::optional<std::string> synth_spec;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled cohort");
  synth->add_option("--spec", synth_spec, "Cohort JSON {subjects, epochs_per_subject, artifact_rate, rate_hz}")
      ->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "Generator seed")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();

  // train
  std::string arch = "cnn_cbam", profile = "toy", data_dir, train_out;
  std::uint64_t train_seed = 0;
  nn::TrainConfig tc;
  double dropout = 0.5;
  bool verbose = false;
  auto* train = app.add_subcommand("train", "Train a model on a labeled directory");
  train->add_option("--arch", arch, "cnn | cnn_lstm | cnn_cbam | cnn_cbam_lstm | heuristic_1dcnn")->capture_default_str();
  train->add_option("--data", data_dir, "Directory of recordings and labels")->required()->check(CLI::ExistingDirectory);
  train->add_option("--profile", profile, "toy | full")->capture_default_str();
  train->add_option("--seed", train_seed, "Seed for initialization, split, SMOTE and batching")->required();
  train->add_option("--out", train_out, "Weight file to write")->required();
  train->add_option("--lr", tc.adam.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--max-epochs", tc.max_epochs)->capture_default_str();
  train->add_option("--patience", tc.patience)->capture_default_str();
  train->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train->add_option("--dropout", dropout)->capture_default_str();
  train->add_flag("--verbose", verbose, "Log per-epoch losses to stderr");

  // detect / localize
  std::string weights, rec_path, det_out;
  std::optional<std::string> det_arch;
  auto* detect_cmd = app.add_subcommand("detect", "Score every epoch of a recording");
  detect_cmd->add_option("--weights", weights)->required();
  detect_cmd->add_option("--rec", rec_path, "Recording (.json raw sidecar or .csv)")->required();
  detect_cmd->add_option("--out", det_out, "Report (JSON lines); maps go to <stem>.maps.jsonl")->required();
  detect_cmd->add_option("--arch", det_arch, "Refuse unless the weight file holds this architecture");

  std::optional<double> loc_threshold;
  auto* localize_cmd = app.add_subcommand("localize", "Artifact intervals from attention maps");
  localize_cmd->add_option("--weights", weights)->required();
  localize_cmd->add_option("--rec", rec_path)->required();
  localize_cmd->add_option("--threshold", loc_threshold, "Attention threshold (default: stored)")
      ->check(CLI::Range(0.0, 1.0));
  localize_cmd->add_option("--out", det_out)->required();

  // eval
  EvalOptions eo;
  std::string eval_out;
  std::optional<std::string> plots;
  auto* eval_cmd = app.add_subcommand("eval", "Epoch and window metrics over detection reports");
  eval_cmd->add_option("--reports", eo.reports_dir)->required();
  eval_cmd->add_option("--labels", eo.labels_dir)->required();
  eval_cmd->add_option("--out", eval_out)->required();
  eval_cmd->add_option("--plots", plots, "Directory for SVG figures");

  // serve
  int port = 8750;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Local review API (no authentication)");
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);

  // layers
  std::string layer_format = "md";
  auto* layers = app.add_subcommand("layers", "Print the layer table of an architecture");
  layers->add_option("--arch", arch)->capture_default_str();
  layers->add_option("--profile", profile)->capture_default_str();
  layers->add_option("--format", layer_format)->check(CLI::IsMember({"md", "json"}))->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (*synth) {
      nlohmann::json spec = nlohmann::json::object();
      if (synth_spec) {
        spec = nlohmann::json::parse(read_file_text(*synth_spec), nullptr, false);
        if (spec.is_discarded()) throw InputError("spec is not valid JSON: " + *synth_spec);
      }
      const auto ids = synthesize_dataset(cohort_from_json(spec, synth_seed), synth_out);
      err << "wrote " << ids.size() << " recordings to " << synth_out << "\n";
    } else if (*train) {
      TrainOptions opt;
      opt.model.kind = models::model_kind_from_string(arch);
      opt.model.profile = models::profile_from_string(profile);
      opt.model.seed = train_seed;
      opt.model.dropout = dropout;
      opt.train = tc;
      opt.train.patience = std::min(tc.patience, tc.max_epochs);
      opt.train.seed = train_seed;
      opt.train.verbose = verbose;
      opt.log = [&err](const std::string& m) { err << m << "\n"; };
      const auto outcome = train_on_dataset(data_dir, opt);
      nn::write_weight_file(train_out, outcome_weight_file(outcome));
      err << "wrote " << train_out << " (threshold " << outcome.threshold << ")\n";
    } else if (*detect_cmd) {
      const auto model = load_model(weights);
      if (det_arch && models::model_kind_from_string(*det_arch) != model.model->kind()) {
        err << "error: weight file holds " << models::to_string(model.model->kind()) << ", not " << *det_arch << "\n";
        return kExitInput;
      }
      const auto d = detect(model, load_rec_with_id(rec_path));
      write_text(det_out, report_jsonl(d));
      if (!d.maps.empty()) write_text(maps_path_for(det_out), maps_jsonl(d));
    } else if (*localize_cmd) {
      const auto model = load_model(weights);
      if (!models::has_cbam(model.model->kind()))
        throw InputError(models::to_string(model.model->kind()) + " has no attention module to localize with");
      const auto d = detect(model, load_rec_with_id(rec_path));
      write_text(det_out, localization_jsonl(d, loc_threshold.value_or(model.localization_threshold)));
    } else if (*eval_cmd) {
      if (plots) eo.plots_dir = *plots;
      write_json(eval_out, evaluate(eo));
    } else if (*serve) {
      ReviewService service(data_dir);
      HttpServer server(service);
      if (server.bind(host, port) < 0) {
        err << "error: cannot bind " << host << ":" << port << " (port busy?)\n";
        return kExitFailure;
      }
      err << "serving " << data_dir << " on http://" << host << ":" << port << "\n";
      server.listen();
    } else if (*layers) {
      models::ModelConfig cfg;
      cfg.kind = models::model_kind_from_string(arch);
      cfg.profile = models::profile_from_string(profile);
      const models::Model<float> model(cfg);
      if (layer_format == "json") {
        out << models::layer_table_json(model.layer_table()).dump(2) << "\n";
      } else {
        out << models::layer_table_markdown(model.layer_table());
      }
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace eegart::app
