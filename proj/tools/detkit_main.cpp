#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "detkit/darknet/config.hpp"
#include "detkit/darknet/weights.hpp"
#include "detkit/eval.hpp"
#include "detkit/io/dataset.hpp"
#include "detkit/io/image.hpp"
#include "detkit/io/render.hpp"
#include "detkit/io/report.hpp"
#include "detkit/nn/network.hpp"
#include "detkit/post/decode.hpp"
#include "detkit/types.hpp"

namespace fs = std::filesystem;
using namespace detkit;

namespace {

struct DetectArgs {
  std::string cfg;
  std::string weights;
  std::string input;
  std::string names;
  std::string out;
  std::string render_dir;
  double conf = post::kDefaultScoreThreshold;
  double nms = post::kDefaultNmsThreshold;
  bool direct = false;
};

struct EvalArgs {
  std::string gt;
  std::vector<std::string> dets;
  std::string names;
  std::string report;
  std::string json;
  std::vector<double> iou = default_iou_thresholds();
  std::string mode = "all-points";
};

struct RenderArgs {
  std::string images;
  std::string dets;
  std::string names;
  std::string out;
};

std::vector<fs::path> collect_images(const std::string& input) {
  std::vector<fs::path> images;
  const fs::path p(input);
  if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p)) {
      const std::string ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg")) {
        images.push_back(entry.path());
      }
    }
    std::sort(images.begin(), images.end());
    if (images.empty()) throw DataError("no PNG/JPEG images found in " + input);
  } else if (fs::exists(p)) {
    images.push_back(p);
  } else {
    throw DataError("input does not exist: " + input);
  }
  return images;
}

ClassMap resolve_classes(const std::string& names_path, int model_classes) {
  ClassMap classes;
  if (!names_path.empty()) {
    classes = io::load_class_names(names_path);
  } else if (model_classes == 2 || model_classes == 0) {
    classes = ClassMap::default_apples();
  } else {
    classes = ClassMap::numbered(model_classes);
  }
  if (model_classes > 0 && classes.size() != model_classes) {
    throw ArgumentError("--names lists " + std::to_string(classes.size()) +
                        " classes but the model predicts " + std::to_string(model_classes));
  }
  return classes;
}

void check_thresholds(const EvalArgs& args) {
  if (args.iou.empty()) throw ArgumentError("--iou needs at least one threshold");
  for (double t : args.iou) {
    if (!(t > 0.0) || !(t <= 1.0)) {
      throw ArgumentError("--iou values must lie in (0, 1], got " + std::to_string(t));
    }
  }
}

unsigned worker_count(std::size_t jobs) {
  unsigned workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  if (const char* env = std::getenv("DETKIT_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) workers = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(jobs, 1)));
}

int run_detect(const DetectArgs& args) {
  if (!(args.conf >= 0.0) || !(args.conf <= 1.0)) {
    throw ArgumentError("--conf must lie in [0, 1], got " + std::to_string(args.conf));
  }
  if (!(args.nms > 0.0) || !(args.nms <= 1.0)) {
    throw ArgumentError("--nms must lie in (0, 1], got " + std::to_string(args.nms));
  }

  const darknet::NetworkConfig config = darknet::parse_config_file(args.cfg);
  for (const std::string& w : config.warnings) std::cerr << "warning: " << w << "\n";
  darknet::validate_detection_topology(config);
  const darknet::WeightStore weights = darknet::load_weights_file(args.weights, config);
  const nn::CompiledNetwork net = nn::CompiledNetwork::compile(config, weights);
  const ClassMap classes = resolve_classes(args.names, config.classes);
  const nn::ConvPath path = args.direct ? nn::ConvPath::direct : nn::ConvPath::gemm;

  const std::vector<fs::path> images = collect_images(args.input);
  {
    std::vector<std::string> ids;
    ids.reserve(images.size());
    for (const fs::path& p : images) ids.push_back(p.stem().string());
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw DataError("duplicate image ids in input set");
    }
  }
  if (!args.render_dir.empty()) fs::create_directories(args.render_dir);

  std::vector<std::vector<Detection>> per_image(images.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  auto work = [&]() {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= images.size()) return;
      try {
        const io::ImageU8 image = io::read_image(images[i].string());
        const post::LetterboxTransform transform =
            post::make_letterbox(image.width, image.height, config.width, config.height);
        const Tensor input = post::letterbox_image(io::to_tensor(image), transform);
        const std::vector<nn::HeadOutput> heads = net.forward(input, path);
        per_image[i] = post::postprocess(heads, config.width, config.height, transform, args.conf,
                                         args.nms, images[i].stem().string());
        if (!args.render_dir.empty()) {
          const io::ImageU8 annotated = io::render_annotated(image, per_image[i], classes);
          io::write_png(annotated, (fs::path(args.render_dir) /
                                    (images[i].stem().string() + ".png")).string());
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const unsigned workers = worker_count(images.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Deterministic reduction: images were sorted by path and ids are unique.
  std::vector<Detection> all;
  for (const auto& dets : per_image) all.insert(all.end(), dets.begin(), dets.end());

  if (args.out.empty()) {
    std::cout << io::format_detections(all);
  } else {
    io::write_detections(all, args.out);
  }
  std::cerr << "detected " << all.size() << " objects across " << images.size() << " images\n";
  return 0;
}

EvalReport evaluate_file(const std::string& dets_path,
                         const std::vector<GroundTruthObject>& ground_truth,
                         const ClassMap& classes, const EvalArgs& args) {
  const std::vector<Detection> detections = io::load_detections(dets_path);
  return evaluate(detections, ground_truth, classes, args.iou, ap_mode_from_string(args.mode));
}

int run_eval(const EvalArgs& args, bool compare) {
  check_thresholds(args);
  const ClassMap classes = resolve_classes(args.names, 0);
  const io::DatasetManifest manifest = io::load_manifest(args.gt);
  const std::vector<GroundTruthObject> ground_truth = io::load_ground_truth(manifest, classes);

  std::string text;
  std::string json;
  if (compare) {
    std::vector<io::NamedReport> reports;
    for (const std::string& path : args.dets) {
      reports.push_back(
          {fs::path(path).stem().string(), evaluate_file(path, ground_truth, classes, args)});
    }
    text = io::format_compare_text(reports);
    json = io::format_compare_json(reports);
  } else {
    const EvalReport report = evaluate_file(args.dets.front(), ground_truth, classes, args);
    text = io::format_report_text(report);
    json = io::format_report_json(report);
  }

  if (args.report.empty()) {
    std::cout << text;
  } else {
    io::write_text_file(text, args.report);
  }
  if (!args.json.empty()) io::write_text_file(json, args.json);
  return 0;
}

int run_render(const RenderArgs& args) {
  const ClassMap classes =
      args.names.empty() ? ClassMap::default_apples() : io::load_class_names(args.names);
  const std::vector<Detection> detections = io::load_detections(args.dets);
  const std::vector<fs::path> images = collect_images(args.images);
  fs::create_directories(args.out);

  for (const fs::path& path : images) {
    const std::string id = path.stem().string();
    std::vector<Detection> mine;
    for (const Detection& d : detections) {
      if (d.image_id == id) mine.push_back(d);
    }
    const io::ImageU8 image = io::read_image(path.string());
    const io::ImageU8 annotated = io::render_annotated(image, mine, classes);
    io::write_png(annotated, (fs::path(args.out) / (id + ".png")).string());
  }
  std::cerr << "rendered " << images.size() << " images into " << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Darknet YOLOv3 CPU inference and detection AP/mAP evaluation"};
  app.require_subcommand(1);

  DetectArgs detect_args;
  CLI::App* detect = app.add_subcommand("detect", "Run a Darknet model over images");
  detect->add_option("--cfg", detect_args.cfg, "Darknet .cfg file")->required();
  detect->add_option("--weights", detect_args.weights, "Darknet .weights file")->required();
  detect->add_option("--input", detect_args.input, "image file or directory")->required();
  detect->add_option("--conf", detect_args.conf, "score threshold (default 0.25)");
  detect->add_option("--nms", detect_args.nms, "NMS IOU threshold (default 0.45)");
  detect->add_option("--out", detect_args.out, "detections output file (default stdout)");
  detect->add_option("--render", detect_args.render_dir, "directory for annotated PNGs");
  detect->add_option("--names", detect_args.names, "class names file");
  detect->add_flag("--direct", detect_args.direct, "use the direct conv path instead of GEMM");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a detections file against ground truth");
  eval_cmd->add_option("--gt", eval_args.gt, "dataset manifest (directory or listing file)")
      ->required();
  eval_cmd->add_option("--dets", eval_args.dets, "detections file")->required()->expected(1);
  eval_cmd->add_option("--iou", eval_args.iou, "IOU thresholds (default 0.3,0.5,0.7)")
      ->delimiter(',');
  eval_cmd->add_option("--mode", eval_args.mode, "AP mode: all-points | eleven-point");
  eval_cmd->add_option("--report", eval_args.report, "report file (default stdout)");
  eval_cmd->add_option("--json", eval_args.json, "machine-readable report file");
  eval_cmd->add_option("--names", eval_args.names, "class names file (default apple pair)");

  EvalArgs compare_args;
  CLI::App* compare = app.add_subcommand("compare", "Score several detectors side by side");
  compare->add_option("--gt", compare_args.gt, "dataset manifest")->required();
  compare->add_option("--dets", compare_args.dets, "detections file (repeat per detector)")
      ->required();
  compare->add_option("--iou", compare_args.iou, "IOU thresholds (default 0.3,0.5,0.7)")
      ->delimiter(',');
  compare->add_option("--mode", compare_args.mode, "AP mode: all-points | eleven-point");
  compare->add_option("--report", compare_args.report, "report file (default stdout)");
  compare->add_option("--json", compare_args.json, "machine-readable report file");
  compare->add_option("--names", compare_args.names, "class names file");

  RenderArgs render_args;
  CLI::App* render = app.add_subcommand("render", "Draw detections from a file onto images");
  render->add_option("--images", render_args.images, "image file or directory")->required();
  render->add_option("--dets", render_args.dets, "detections file")->required();
  render->add_option("--out", render_args.out, "output directory")->required();
  render->add_option("--names", render_args.names, "class names file");

  try {
    app.parse(argc, argv);
    if (detect->parsed()) return run_detect(detect_args);
    if (eval_cmd->parsed()) return run_eval(eval_args, false);
    if (compare->parsed()) return run_eval(compare_args, true);
    if (render->parsed()) return run_render(render_args);
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
