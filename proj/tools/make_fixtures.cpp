// Writes the shipped fixtures: model files, synthetic scenes with their
// groundtruth, a detections CSV and a run config. Everything is derived from
// fixed seeds, so rerunning reproduces the same bytes.

#include <filesystem>
#include <iostream>
#include <string>

#include "e2x/detection.hpp"
#include "e2x/io.hpp"
#include "e2x/model.hpp"
#include "e2x/scene.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  const fs::path dir = argc > 1 ? argv[1] : "fixtures";
  fs::create_directories(dir);

  const e2x::ToyDetector detector{e2x::ToyDetectorConfig{}};
  e2x::save_model((dir / "detector.e2xm").string(), detector);
  e2x::save_model((dir / "classifier.e2xm").string(), e2x::TinyCNN{e2x::TinyCnnConfig{}});

  const e2x::Preprocessing pre;
  std::vector<e2x::GroundTruth> gts;
  std::vector<e2x::Detection> dets;
  for (int i = 0; i < 2; ++i) {
    const std::string id = "scene" + std::to_string(i);
    const auto scene = e2x::make_scene(e2x::SceneParams{}, 100 + i, id);
    const auto png = (dir / (id + ".png")).string();
    e2x::write_png(png, pre.to_display(scene.image));
    gts.insert(gts.end(), scene.objects.begin(), scene.objects.end());
    // Detections come from the image as stored, not the unquantized scene.
    auto top = e2x::top_detections(detector, pre.to_model(e2x::read_png(png)), 12);
    for (auto& d : top) d.image_id = id;
    dets.insert(dets.end(), top.begin(), top.end());
  }
  e2x::write_text_file((dir / "groundtruth.csv").string(), e2x::groundtruth_to_csv(gts));
  e2x::write_text_file((dir / "detections.csv").string(), e2x::detections_to_csv(dets));
  std::cout << "wrote fixtures to " << dir.string() << "\n";
  return 0;
}
