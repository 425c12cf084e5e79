// Copyright 2026 The domainrag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "domainrag/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "domainrag/codec.hpp"
#include "domainrag/errors.hpp"
#include "domainrag/file_util.hpp"

namespace domainrag {

using Json = nlohmann::json;

namespace {

std::uint64_t json_id(const Json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key) || !obj.at(key).is_number_unsigned()) {
    throw FormatError(std::string(where) + ": \"" + key + "\" must be a non-negative integer");
  }
  return obj.at(key).get<std::uint64_t>();
}

int json_extent(const Json& obj, const char* key, std::string_view where) {
  const std::uint64_t v = json_id(obj, key, where);
  if (v == 0 || v > 1'000'000) throw FormatError(std::string(where) + ": \"" + key + "\" out of range");
  return static_cast<int>(v);
}

std::string json_string(const Json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw FormatError(std::string(where) + ": \"" + key + "\" must be a string");
  }
  return obj.at(key).get<std::string>();
}

const Json& json_array(const Json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_array()) {
    throw FormatError(std::string("\"") + key + "\" must be an array");
  }
  return obj.at(key);
}

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

// Uniform draw in [0, bound) without modulo bias.
std::uint64_t bounded(std::uint64_t& state, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t r = splitmix64(state);
    if (r < limit) return r % bound;
  }
}

// First `k` entries of a seeded Fisher-Yates shuffle of `items`.
template <typename T>
std::vector<T> choose(std::vector<T> items, std::size_t k, std::uint64_t& state) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + bounded(state, items.size() - i);
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  return items;
}

Json params_to_json(const GenerationParams& p) {
  return Json{{"guidance_scale", p.guidance_scale},
              {"num_steps", p.num_steps},
              {"noise_strength", p.noise_strength},
              {"seed", p.seed}};
}

GenerationParams params_from_json(const Json& j) {
  GenerationParams p;
  p.guidance_scale = j.at("guidance_scale").get<double>();
  p.num_steps = j.at("num_steps").get<int>();
  p.noise_strength = j.at("noise_strength").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

Json boxes_to_json(const std::vector<LabeledBox>& boxes) {
  Json out = Json::array();
  for (const auto& b : boxes) {
    out.push_back({{"category_id", b.category_id}, {"bbox", {b.box.x, b.box.y, b.box.w, b.box.h}}});
  }
  return out;
}

std::vector<ImageId> derive_query(const DetectionDataset& dataset, const Episode& episode) {
  const auto support = episode.support_image_ids();
  std::set<ImageId> query;
  for (CategoryId c : episode.categories) {
    for (ImageId id : dataset.images_with(c)) {
      if (!std::binary_search(support.begin(), support.end(), id)) query.insert(id);
    }
  }
  return {query.begin(), query.end()};
}

}  // namespace

DetectionDataset::DetectionDataset(std::vector<ImageInfo> images, std::vector<Annotation> annotations,
                                   std::vector<Category> categories)
    : images_(std::move(images)), annotations_(std::move(annotations)), categories_(std::move(categories)) {
  std::unordered_map<ImageId, const ImageInfo*> by_id;
  for (const auto& img : images_) {
    if (img.width <= 0 || img.height <= 0) {
      throw ValidationError("image " + std::to_string(img.id) + " has non-positive extent");
    }
    if (!by_id.emplace(img.id, &img).second) {
      throw ValidationError("duplicate image id " + std::to_string(img.id));
    }
  }
  std::unordered_set<CategoryId> cats;
  for (const auto& c : categories_) {
    if (!cats.insert(c.id).second) throw ValidationError("duplicate category id " + std::to_string(c.id));
  }
  std::unordered_set<std::uint64_t> ann_ids;
  for (const auto& a : annotations_) {
    if (!ann_ids.insert(a.id).second) throw ValidationError("duplicate annotation id " + std::to_string(a.id));
    const auto it = by_id.find(a.image_id);
    if (it == by_id.end()) {
      throw ValidationError("annotation " + std::to_string(a.id) + " references missing image " +
                            std::to_string(a.image_id));
    }
    if (!cats.count(a.category_id)) {
      throw ValidationError("annotation " + std::to_string(a.id) + " references missing category " +
                            std::to_string(a.category_id));
    }
    try {
      a.bbox.validate(it->second->width, it->second->height);
    } catch (const GeometryError& e) {
      throw ValidationError("annotation " + std::to_string(a.id) + ": " + e.what());
    }
  }
}

const ImageInfo* DetectionDataset::find_image(ImageId id) const {
  for (const auto& img : images_) {
    if (img.id == id) return &img;
  }
  return nullptr;
}

std::vector<const Annotation*> DetectionDataset::annotations_for(ImageId id) const {
  std::vector<const Annotation*> out;
  for (const auto& a : annotations_) {
    if (a.image_id == id) out.push_back(&a);
  }
  return out;
}

std::vector<ImageId> DetectionDataset::images_with(CategoryId category) const {
  std::set<ImageId> ids;
  for (const auto& a : annotations_) {
    if (a.category_id == category) ids.insert(a.image_id);
  }
  return {ids.begin(), ids.end()};
}

DetectionDataset parse_coco(std::string_view text) {
  const Json root = parse_json(text, "COCO annotation file");
  if (!root.is_object()) throw FormatError("COCO annotation file must be a JSON object");

  std::vector<ImageInfo> images;
  std::unordered_map<ImageId, std::pair<int, int>> extents;
  for (const auto& j : json_array(root, "images")) {
    if (!j.is_object()) throw FormatError("images entries must be objects");
    ImageInfo img{json_id(j, "id", "image"), json_string(j, "file_name", "image"), json_extent(j, "width", "image"),
                  json_extent(j, "height", "image")};
    extents[img.id] = {img.width, img.height};
    images.push_back(std::move(img));
  }

  std::vector<Category> categories;
  for (const auto& j : json_array(root, "categories")) {
    if (!j.is_object()) throw FormatError("categories entries must be objects");
    categories.push_back({json_id(j, "id", "category"), json_string(j, "name", "category")});
  }

  std::vector<Annotation> annotations;
  for (const auto& j : json_array(root, "annotations")) {
    if (!j.is_object()) throw FormatError("annotations entries must be objects");
    Annotation a;
    a.id = json_id(j, "id", "annotation");
    a.image_id = json_id(j, "image_id", "annotation");
    a.category_id = json_id(j, "category_id", "annotation");
    if (!j.contains("bbox") || !j.at("bbox").is_array() || j.at("bbox").size() != 4) {
      throw FormatError("annotation " + std::to_string(a.id) + ": bbox must be [x, y, w, h]");
    }
    double v[4];
    for (std::size_t i = 0; i < 4; ++i) {
      const Json& e = j.at("bbox")[i];
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        throw FormatError("annotation " + std::to_string(a.id) + ": bbox entries must be finite numbers");
      }
      v[i] = e.get<double>();
    }
    const auto ext = extents.find(a.image_id);
    if (ext != extents.end()) {
      const auto [w, h] = ext->second;
      if (v[0] < 0 || v[1] < 0 || v[2] <= 0 || v[3] <= 0 || v[0] + v[2] > w || v[1] + v[3] > h) {
        throw ValidationError("annotation " + std::to_string(a.id) + ": bbox outside its image");
      }
      const int x0 = static_cast<int>(std::floor(v[0]));
      const int y0 = static_cast<int>(std::floor(v[1]));
      a.bbox = {x0, y0, static_cast<int>(std::ceil(v[0] + v[2])) - x0,
                static_cast<int>(std::ceil(v[1] + v[3])) - y0};
    }
    annotations.push_back(a);
  }
  // Dangling image references are reported by the constructor.
  return DetectionDataset(std::move(images), std::move(annotations), std::move(categories));
}

DetectionDataset load_coco(const std::filesystem::path& path) {
  try {
    return parse_coco(read_file_text(path));
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw_error(e.code(), path.string() + ": " + e.what());
  }
}

std::string dump_coco(const DetectionDataset& dataset) {
  Json images = Json::array();
  for (const auto& img : dataset.images()) {
    images.push_back({{"id", img.id}, {"file_name", img.file_name}, {"width", img.width}, {"height", img.height}});
  }
  Json annotations = Json::array();
  for (const auto& a : dataset.annotations()) {
    annotations.push_back({{"id", a.id},
                           {"image_id", a.image_id},
                           {"category_id", a.category_id},
                           {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
                           {"area", static_cast<std::int64_t>(a.bbox.w) * a.bbox.h},
                           {"iscrowd", 0}});
  }
  Json categories = Json::array();
  for (const auto& c : dataset.categories()) categories.push_back({{"id", c.id}, {"name", c.name}});
  return Json{{"images", images}, {"annotations", annotations}, {"categories", categories}}.dump(1) + "\n";
}

void write_coco(const DetectionDataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, dump_coco(dataset));
}

std::vector<ImageId> Episode::support_image_ids() const {
  std::set<ImageId> ids;
  for (const auto& e : support) ids.insert(e.image_id);
  return {ids.begin(), ids.end()};
}

Episode sample_episode(const DetectionDataset& dataset, const EpisodeSpec& spec) {
  if (spec.n_way < 1 || spec.k_shot < 1) throw ValidationError("n_way and k_shot must be positive");
  const auto n = static_cast<std::size_t>(spec.n_way);
  const auto k = static_cast<std::size_t>(spec.k_shot);
  if (n > dataset.categories().size()) {
    throw ValidationError("n_way " + std::to_string(n) + " exceeds the " +
                          std::to_string(dataset.categories().size()) + " categories of the dataset");
  }

  std::vector<CategoryId> eligible;
  std::map<CategoryId, std::vector<ImageId>> pools;
  for (const auto& c : dataset.categories()) {
    auto pool = dataset.images_with(c.id);
    if (pool.size() >= k) {
      eligible.push_back(c.id);
      pools[c.id] = std::move(pool);
    }
  }
  std::sort(eligible.begin(), eligible.end());
  if (eligible.size() < n) {
    throw InsufficientDataError("only " + std::to_string(eligible.size()) + " categories have at least " +
                                std::to_string(k) + " images; " + std::to_string(n) + " requested");
  }

  std::uint64_t state = spec.seed;
  Episode episode;
  episode.categories = choose(eligible, n, state);
  for (CategoryId c : episode.categories) {
    for (ImageId id : choose(pools[c], k, state)) episode.support.push_back({c, id});
  }
  episode.query_image_ids = derive_query(dataset, episode);
  return episode;
}

Episode parse_episode(const DetectionDataset& dataset, std::string_view text) {
  const Json root = parse_json(text, "episode file");
  if (!root.is_object()) throw FormatError("episode file must be a JSON object");
  Episode episode;
  std::set<CategoryId> seen;
  std::set<std::pair<CategoryId, ImageId>> entries;
  for (const auto& j : json_array(root, "support")) {
    if (!j.is_object()) throw FormatError("support entries must be objects");
    const SupportEntry e{json_id(j, "category_id", "support entry"), json_id(j, "image_id", "support entry")};
    const auto pool = dataset.images_with(e.category_id);
    if (!std::binary_search(pool.begin(), pool.end(), e.image_id)) {
      throw ValidationError("support image " + std::to_string(e.image_id) + " has no box of category " +
                            std::to_string(e.category_id));
    }
    if (!entries.insert({e.category_id, e.image_id}).second) {
      throw ValidationError("duplicate support entry for image " + std::to_string(e.image_id));
    }
    if (seen.insert(e.category_id).second) episode.categories.push_back(e.category_id);
    episode.support.push_back(e);
  }
  if (episode.support.empty()) throw ValidationError("episode has no support entries");

  if (root.contains("query_image_ids")) {
    const auto support = episode.support_image_ids();
    std::set<ImageId> query;
    for (const auto& j : json_array(root, "query_image_ids")) {
      if (!j.is_number_unsigned()) throw FormatError("query_image_ids must hold non-negative integers");
      const ImageId id = j.get<ImageId>();
      if (!dataset.find_image(id)) throw ValidationError("query image " + std::to_string(id) + " not in dataset");
      if (std::binary_search(support.begin(), support.end(), id)) {
        throw ValidationError("query image " + std::to_string(id) + " is also a support image");
      }
      query.insert(id);
    }
    episode.query_image_ids.assign(query.begin(), query.end());
  } else {
    episode.query_image_ids = derive_query(dataset, episode);
  }
  return episode;
}

Episode load_episode(const DetectionDataset& dataset, const std::filesystem::path& path) {
  try {
    return parse_episode(dataset, read_file_text(path));
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw_error(e.code(), path.string() + ": " + e.what());
  }
}

std::string dump_episode(const Episode& episode) {
  Json support = Json::array();
  for (const auto& e : episode.support) support.push_back({{"category_id", e.category_id}, {"image_id", e.image_id}});
  return Json{{"categories", episode.categories}, {"support", support}, {"query_image_ids", episode.query_image_ids}}
             .dump(1) +
         "\n";
}

SupportSet episode_support(const DetectionDataset& dataset, const Episode& episode) {
  const std::set<CategoryId> cats(episode.categories.begin(), episode.categories.end());
  SupportSet out;
  for (ImageId id : episode.support_image_ids()) {
    const ImageInfo* img = dataset.find_image(id);
    if (!img) throw ValidationError("support image " + std::to_string(id) + " not in dataset");
    SupportSample s{img->id, img->file_name, img->width, img->height, {}};
    for (const Annotation* a : dataset.annotations_for(id)) {
      if (cats.count(a->category_id)) s.boxes.push_back({a->bbox, a->category_id});
    }
    if (s.boxes.empty()) throw ValidationError("support image " + std::to_string(id) + " has no episode boxes");
    out.push_back(std::move(s));
  }
  return out;
}

SupportSet all_samples(const DetectionDataset& dataset) {
  std::unordered_map<ImageId, std::vector<LabeledBox>> boxes;
  for (const auto& a : dataset.annotations()) boxes[a.image_id].push_back({a.bbox, a.category_id});
  SupportSet out;
  for (const auto& img : dataset.images()) {
    auto it = boxes.find(img.id);
    if (it == boxes.end()) continue;
    out.push_back({img.id, img.file_name, img.width, img.height, std::move(it->second)});
  }
  return out;
}

DetectionDataset subset(const DetectionDataset& dataset, const std::vector<ImageId>& image_ids,
                        const std::vector<CategoryId>& categories) {
  const std::unordered_set<ImageId> ids(image_ids.begin(), image_ids.end());
  const std::unordered_set<CategoryId> cats(categories.begin(), categories.end());
  const auto keep_cat = [&](CategoryId c) { return cats.empty() || cats.count(c) > 0; };
  std::vector<ImageInfo> images;
  for (const auto& img : dataset.images()) {
    if (ids.count(img.id)) images.push_back(img);
  }
  std::vector<Annotation> annotations;
  for (const auto& a : dataset.annotations()) {
    if (ids.count(a.image_id) && keep_cat(a.category_id)) annotations.push_back(a);
  }
  std::vector<Category> kept;
  for (const auto& c : dataset.categories()) {
    if (keep_cat(c.id)) kept.push_back(c);
  }
  return DetectionDataset(std::move(images), std::move(annotations), std::move(kept));
}

std::map<CategoryId, std::size_t> per_class_counts(const SupportSet& support) {
  std::map<CategoryId, std::size_t> counts;
  for (const auto& s : support) {
    std::set<CategoryId> cats;
    for (const auto& b : s.boxes) cats.insert(b.category_id);
    for (CategoryId c : cats) ++counts[c];
  }
  return counts;
}

SupportSet expand_support(const SupportSet& support, const std::vector<AugmentedSample>& generated, int n) {
  if (n < 0) throw ValidationError("n must be non-negative");
  std::unordered_map<ImageId, const SupportSample*> originals;
  for (const auto& s : support) {
    if (!originals.emplace(s.id, &s).second) {
      throw ValidationError("duplicate support sample id " + std::to_string(s.id));
    }
  }
  std::unordered_map<ImageId, int> produced;
  std::unordered_set<ImageId> ids;
  for (const auto& s : support) ids.insert(s.id);

  SupportSet out = support;
  for (const auto& g : generated) {
    const auto it = originals.find(g.provenance.source_sample_id);
    if (it == originals.end()) {
      throw ValidationError("generated sample " + std::to_string(g.id) + " names unknown source " +
                            std::to_string(g.provenance.source_sample_id));
    }
    if (g.boxes != it->second->boxes) {
      throw ValidationError("generated sample " + std::to_string(g.id) + " does not carry its source's boxes");
    }
    if (!ids.insert(g.id).second) throw ValidationError("duplicate sample id " + std::to_string(g.id));
    ++produced[g.provenance.source_sample_id];
    out.push_back({g.id, g.image_path, g.width, g.height, g.boxes});
  }
  for (const auto& s : support) {
    const int got = produced.count(s.id) ? produced[s.id] : 0;
    if (got != n) {
      throw AccountingError("support sample " + std::to_string(s.id) + " has " + std::to_string(got) +
                            " generated samples, expected " + std::to_string(n));
    }
  }
  return out;
}

std::filesystem::path provenance_path(const std::filesystem::path& annotation_path) {
  auto out = annotation_path;
  out.replace_extension(".provenance.jsonl");
  return out;
}

void emit_coco(const SupportSet& originals, const std::vector<AugmentedSample>& augmented,
               const std::vector<Category>& categories, const std::filesystem::path& path) {
  std::vector<ImageInfo> images;
  std::vector<Annotation> annotations;
  std::uint64_t next_ann = 1;
  const auto add = [&](ImageId id, const std::string& file, int w, int h, const std::vector<LabeledBox>& boxes) {
    images.push_back({id, file, w, h});
    for (const auto& b : boxes) annotations.push_back({next_ann++, id, b.category_id, b.box});
  };
  for (const auto& s : originals) add(s.id, s.image_path, s.width, s.height, s.boxes);
  std::string sidecar;
  for (const auto& a : augmented) {
    add(a.id, a.image_path, a.width, a.height, a.boxes);
    sidecar += provenance_line(a);
    sidecar += '\n';
  }
  const DetectionDataset dataset(std::move(images), std::move(annotations), categories);
  write_coco(dataset, path);
  write_file_atomic(provenance_path(path), sidecar);
}

std::string provenance_line(const AugmentedSample& sample) {
  const Provenance& p = sample.provenance;
  return Json{{"image_id", sample.id},
              {"file_name", sample.image_path},
              {"width", sample.width},
              {"height", sample.height},
              {"boxes", boxes_to_json(sample.boxes)},
              {"source_sample_id", p.source_sample_id},
              {"background_record_id", p.background_record_id},
              {"background_source", p.background_source},
              {"variant", p.variant},
              {"seed", p.seed},
              {"generator_params", params_to_json(p.generator_params)},
              {"filler_params", params_to_json(p.filler_params)},
              {"resample_policy", p.resample_policy},
              {"config_hash", p.config_hash}}
      .dump();
}

AugmentedSample parse_provenance_line(std::string_view line) {
  const Json j = parse_json(line, "provenance record");
  try {
    AugmentedSample s;
    s.id = j.at("image_id").get<ImageId>();
    s.image_path = j.at("file_name").get<std::string>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    for (const auto& b : j.at("boxes")) {
      const auto& v = b.at("bbox");
      s.boxes.push_back({{v.at(0).get<int>(), v.at(1).get<int>(), v.at(2).get<int>(), v.at(3).get<int>()},
                         b.at("category_id").get<CategoryId>()});
    }
    Provenance& p = s.provenance;
    p.source_sample_id = j.at("source_sample_id").get<ImageId>();
    p.background_record_id = j.at("background_record_id").get<std::uint64_t>();
    p.background_source = j.at("background_source").get<std::string>();
    p.variant = j.at("variant").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.generator_params = params_from_json(j.at("generator_params"));
    p.filler_params = params_from_json(j.at("filler_params"));
    p.resample_policy = j.at("resample_policy").get<std::string>();
    p.config_hash = j.at("config_hash").get<std::string>();
    return s;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("provenance record: ") + e.what());
  }
}

std::vector<AugmentedSample> load_provenance(const std::filesystem::path& path) {
  std::istringstream in(read_file_text(path));
  std::vector<AugmentedSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_provenance_line(line));
  }
  return out;
}

}  // namespace domainrag
