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

#include "domainrag/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "json.hpp"

#include "domainrag/codec.hpp"
#include "domainrag/fake_backend.hpp"
#include "domainrag/file_util.hpp"
#include "domainrag/http_backend.hpp"
#include "domainrag/metrics.hpp"

namespace domainrag {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

// Runs fn(i) for i in [0, count) on up to `workers` threads. Exceptions are
// kept per index; with `stop_on_error` no new index starts after a failure.
std::vector<std::exception_ptr> parallel_for(std::size_t count, int workers, bool stop_on_error,
                                             const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto loop = [&] {
    for (;;) {
      if (stop_on_error && failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, workers));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < std::min(n, count); ++t) threads.emplace_back(loop);
  loop();
  for (auto& t : threads) t.join();
  return errors;
}

fs::path anchored(const fs::path& p) { return fs::weakly_canonical(fs::absolute(p)); }

fs::path canonical_dir(const fs::path& file) {
  const fs::path dir = file.parent_path();
  return anchored(dir.empty() ? fs::path(".") : dir);
}

// `target` expressed relative to `base_dir`, with forward slashes.
std::string relative_ref(const fs::path& target, const fs::path& base_dir) {
  return anchored(target).lexically_relative(anchored(base_dir)).generic_string();
}

// Where the copy of a support image lives inside the output tree. Paths that
// would leave the tree or land in a generated folder are replaced.
std::string local_copy_name(const SupportSample& s) {
  const fs::path p = fs::path(s.image_path).lexically_normal();
  const std::string head = p.empty() ? std::string() : p.begin()->generic_string();
  if (p.is_absolute() || p.empty() || head == ".." || head == "." || head == "inpainted" || head == "augmented" ||
      head == "support") {
    return "support/" + std::to_string(s.id) + ".png";
  }
  return p.generic_string();
}

ImageBuffer load_sized(const fs::path& path, int width, int height) {
  ImageBuffer image = read_png(path);
  if (image.width() != width || image.height() != height) {
    throw ValidationError(path.string() + " is " + std::to_string(image.width()) + "x" +
                          std::to_string(image.height()) + ", annotation says " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  return image;
}

struct StageFailure {
  AugmentFailure failure;
};

template <typename Fn>
auto in_stage(const char* stage, ImageId id, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageFailure&) {
    throw;
  } catch (const Error& e) {
    throw StageFailure{{id, stage, e.code(), e.what()}};
  } catch (const std::exception& e) {
    throw StageFailure{{id, stage, ErrorCode::kValidation, e.what()}};
  }
}

[[noreturn]] void rethrow_failure(const AugmentFailure& f) {
  throw_error(f.code, "support " + std::to_string(f.support_id) + ", stage " + f.stage + ": " + f.message);
}

AugmentFailure failure_of(const std::exception_ptr& error, ImageId id) {
  try {
    std::rethrow_exception(error);
  } catch (const StageFailure& s) {
    return s.failure;
  } catch (const Error& e) {
    return {id, "unknown", e.code(), e.what()};
  } catch (const std::exception& e) {
    return {id, "unknown", ErrorCode::kValidation, e.what()};
  }
}

std::string failures_json(const std::vector<AugmentFailure>& failures) {
  Json out = Json::array();
  for (const auto& f : failures) {
    out.push_back({{"support_id", f.support_id},
                   {"stage", f.stage},
                   {"error", std::string(error_code_name(f.code))},
                   {"message", f.message}});
  }
  return out.dump(1) + "\n";
}

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_png(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Json candidates_json(const RetrievalResult& result, const std::vector<std::string>& refs) {
  Json out = Json::array();
  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    const auto& c = result.ranked[i];
    Json j{{"id", c.id}, {"image_ref", refs.at(i)}, {"score", c.semantic_score}};
    if (c.style_distance) j["style_distance"] = *c.style_distance;
    out.push_back(std::move(j));
  }
  return out;
}

void parse_candidates(const Json& array, RetrievalStage stage, RetrievalResult& result,
                      std::vector<std::string>& refs) {
  result.stage = stage;
  for (const auto& j : array) {
    RankedCandidate c;
    c.id = j.at("id").get<RecordId>();
    c.semantic_score = j.at("score").get<double>();
    if (j.contains("style_distance")) c.style_distance = j.at("style_distance").get<double>();
    result.ranked.push_back(c);
    refs.push_back(j.at("image_ref").get<std::string>());
  }
}

std::vector<std::string> refs_of(const BackgroundIndex& index, const RetrievalResult& result) {
  std::vector<std::string> refs;
  for (const auto& c : result.ranked) refs.push_back(index.image_ref_at(*index.position_of(c.id)));
  return refs;
}

}  // namespace

std::unique_ptr<ModelGateway> make_gateway(const PipelineConfig& config, bool fake) {
  std::vector<ModelGateway::Route> routes;
  if (fake) {
    FakeBackend::Options options;
    options.dims = config.declared;
    auto backend = std::make_shared<FakeBackend>(options);
    for (auto endpoint : config.endpoints) {
      endpoint.max_in_flight = std::max(endpoint.max_in_flight, config.workers);
      routes.push_back({endpoint, backend});
    }
  } else {
    for (const auto& endpoint : config.endpoints) {
      routes.push_back({endpoint, std::make_shared<HttpBackend>(endpoint.address, endpoint.timeout)});
    }
  }
  return std::make_unique<ModelGateway>(config.declared, std::move(routes));
}

std::size_t run_index_build(const fs::path& dataset_path, const fs::path& index_path, const PipelineConfig& config,
                            ModelGateway& gateway) {
  const DetectionDataset dataset = load_coco(dataset_path);
  if (dataset.images().empty()) throw EmptyInputError(dataset_path.string() + " has no images");
  const fs::path data_dir = canonical_dir(dataset_path);
  const fs::path index_dir = canonical_dir(index_path);

  const auto& images = dataset.images();
  std::vector<std::optional<BackgroundRecord>> records(images.size());
  const auto errors = parallel_for(images.size(), config.workers, true, [&](std::size_t i) {
    const ImageInfo& info = images[i];
    const fs::path path = data_dir / info.file_name;
    const ImageBuffer image = load_sized(path, info.width, info.height);
    records[i] = BackgroundRecord{info.id, relative_ref(path, index_dir), gateway.encode_image(image),
                                  style_vector(gateway.extract_feature_map(image)), RecordSource::kDatabase};
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw_error(e.code(), "image " + std::to_string(images[i].id) + ": " + e.what());
    }
  }
  std::vector<BackgroundRecord> built;
  built.reserve(records.size());
  for (auto& r : records) built.push_back(std::move(*r));
  const BackgroundIndex index = build_index(std::move(built));
  save_index(index, index_path);
  return index.size();
}

AugmentReport run_augment(const fs::path& support_path, const fs::path& index_path, const fs::path& out_dir,
                          const PipelineConfig& config, ModelGateway& gateway, bool keep_going) {
  validate_config(config);
  const DetectionDataset dataset = load_coco(support_path);
  const SupportSet support = all_samples(dataset);
  if (support.empty()) throw EmptyInputError(support_path.string() + " has no annotated images");
  const BackgroundIndex index = load_index(index_path);
  if (index.embedding_dim() != config.declared.embedding_dim ||
      index.style_dim() != 2 * config.declared.feature_channels) {
    throw ValidationError("index dims (" + std::to_string(index.embedding_dim()) + ", " +
                          std::to_string(index.style_dim()) + ") do not match the backends (" +
                          std::to_string(config.declared.embedding_dim) + ", " +
                          std::to_string(2 * config.declared.feature_channels) + ")");
  }

  const fs::path support_dir = canonical_dir(support_path);
  const fs::path index_dir = canonical_dir(index_path);
  const std::string hash = config_hash(config);
  const std::size_t n_gen = config.n_generate;

  struct Prepared {
    ImageBuffer image{1, 1};
    BinaryMask mask{1, 1, 1};
    ImageBuffer background{1, 1};
    EmbeddingVector embedding{std::vector<double>{1.0}};
    StyleVector style{std::vector<double>{0.0, 0.0}};
    EmbeddingVector prompt{std::vector<double>{1.0}};
  };

  // Stage 1: decomposition and background descriptors.
  std::vector<std::optional<Prepared>> prepared(support.size());
  auto errors = parallel_for(support.size(), config.workers, !keep_going, [&](std::size_t i) {
    const SupportSample& s = support[i];
    const fs::path src = support_dir / s.image_path;
    Prepared p;
    p.image = in_stage("load", s.id, [&] { return load_sized(src, s.width, s.height); });
    in_stage("load", s.id, [&] { write_png(out_dir / local_copy_name(s), p.image); });
    p.mask = in_stage("mask", s.id, [&] {
      std::vector<BoundingBox> boxes;
      for (const auto& b : s.boxes) boxes.push_back(b.box);
      return build_mask(s.width, s.height, boxes);
    });
    p.background = in_stage("inpaint", s.id, [&] { return gateway.inpaint_background(p.image, p.mask); });
    in_stage("inpaint", s.id, [&] {
      write_png(out_dir / "inpainted" / (std::to_string(s.id) + ".png"), p.background);
    });
    p.embedding = in_stage("encode", s.id, [&] { return gateway.encode_image(p.background); });
    p.style = in_stage("feature_map", s.id, [&] { return style_vector(gateway.extract_feature_map(p.background)); });
    p.prompt = in_stage("prompt_encode", s.id, [&] { return gateway.encode_prompt(p.background); });
    prepared[i] = std::move(p);
  });

  std::vector<std::optional<AugmentFailure>> failures(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (errors[i]) failures[i] = failure_of(errors[i], support[i].id);
  }
  if (!keep_going) {
    for (const auto& f : failures) {
      if (f) rethrow_failure(*f);
    }
  }

  // Optional pool augmentation with the inpainted supports.
  RecordId next_id = 0;
  for (std::size_t pos = 0; pos < index.size(); ++pos) next_id = std::max(next_id, index.id_at(pos) + 1);
  std::vector<std::optional<RecordId>> pool_ids(support.size());
  std::unordered_map<RecordId, std::size_t> pool_owner;
  BackgroundIndex pool = index;
  if (config.include_support_in_pool) {
    std::vector<BackgroundRecord> extra;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (!prepared[i]) continue;
      const RecordId id = next_id + i;
      pool_ids[i] = id;
      pool_owner[id] = i;
      extra.push_back({id, "inpainted/" + std::to_string(support[i].id) + ".png", prepared[i]->embedding,
                       prepared[i]->style, RecordSource::kInpaintedSupport});
    }
    if (!extra.empty()) pool = augment_pool_with_support(index, std::move(extra));
  }

  ImageId aug_base = 0;
  for (const auto& s : support) aug_base = std::max(aug_base, s.id + 1);

  // Stages 2 and 3: retrieval, generation, composition.
  std::vector<std::vector<AugmentedSample>> outputs(support.size());
  errors = parallel_for(support.size(), config.workers, !keep_going, [&](std::size_t i) {
    if (!prepared[i]) return;
    const SupportSample& s = support[i];
    const Prepared& p = *prepared[i];
    if (n_gen == 0) return;

    std::vector<RecordId> excluded;
    if (pool_ids[i]) excluded.push_back(*pool_ids[i]);
    const RetrievalResult ranked = in_stage("retrieve", s.id, [&] {
      RetrievalResult r = retrieve(pool, p.embedding, p.style, config.m, config.n_retrieve, excluded);
      if (r.ranked.empty()) throw InsufficientDataError("no background candidates in the pool");
      return r;
    });

    std::map<RecordId, EmbeddingVector> candidate_prompts;
    auto candidate_prompt = [&](RecordId id) -> const EmbeddingVector& {
      auto it = candidate_prompts.find(id);
      if (it != candidate_prompts.end()) return it->second;
      const std::size_t pos = *pool.position_of(id);
      EmbeddingVector prompt = in_stage("prompt_encode", s.id, [&] {
        if (pool.source_at(pos) == RecordSource::kInpaintedSupport) {
          return gateway.encode_prompt(prepared[pool_owner.at(id)]->background);
        }
        return gateway.encode_prompt(read_png(index_dir / pool.image_ref_at(pos)));
      });
      return candidate_prompts.emplace(id, std::move(prompt)).first->second;
    };

    const ResamplePlan plan = plan_resample(p.image, config.resample_policy);
    const ImageBuffer image_up = in_stage("resample", s.id, [&] { return apply_resample(p.image, plan); });
    const BinaryMask mask_up = in_stage("resample", s.id, [&] { return apply_resample_mask(p.mask, plan); });

    for (std::size_t j = 0; j < n_gen; ++j) {
      const std::size_t pick = config.generation_mode == GenerationMode::kPerCandidate ? j % ranked.ranked.size() : 0;
      const RecordId bg_id = ranked.ranked[pick].id;
      const std::uint64_t seed = mix_seed(mix_seed(config.seed, s.id), j);
      GenerationParams gen = config.generator_params;
      gen.seed = seed;
      GenerationParams fill = config.filler_params;
      fill.seed = seed;

      const EmbeddingVector fused =
          in_stage("fuse", s.id, [&] { return fuse(p.prompt, candidate_prompt(bg_id), config.weights); });
      const ImageBuffer generated = in_stage("generate", s.id, [&] { return gateway.generate_background(fused, gen); });
      const EmbeddingVector gen_prompt = in_stage("prompt_encode", s.id, [&] { return gateway.encode_prompt(generated); });
      const ImageBuffer filled =
          in_stage("fill", s.id, [&] { return gateway.fill_masked(image_up, mask_up, gen_prompt, fill); });
      const ImageBuffer result = in_stage("compose", s.id, [&] {
        ImageBuffer down = apply_resample(compose(image_up, mask_up, filled), plan.inverse());
        if (down.width() != s.width || down.height() != s.height) down = resize_bilinear(down, s.width, s.height);
        // Re-pasting at the original resolution keeps the boxes bit-exact
        // even when the image went through a resample round trip.
        return compose(p.image, p.mask, down);
      });

      AugmentedSample out;
      out.id = aug_base + i * n_gen + j;
      out.image_path = "augmented/" + std::to_string(s.id) + "_" + std::to_string(j) + ".png";
      out.width = s.width;
      out.height = s.height;
      out.boxes = s.boxes;
      const std::size_t pos = *pool.position_of(bg_id);
      out.provenance = Provenance{s.id,
                                  bg_id,
                                  pool.source_at(pos) == RecordSource::kDatabase ? "database" : "inpainted_support",
                                  static_cast<int>(j),
                                  seed,
                                  gen,
                                  fill,
                                  std::string(policy_name(config.resample_policy)),
                                  hash};
      in_stage("write", s.id, [&] { write_png(out_dir / out.image_path, result); });
      outputs[i].push_back(std::move(out));
    }
  });
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (errors[i] && !failures[i]) failures[i] = failure_of(errors[i], support[i].id);
  }

  AugmentReport report;
  report.originals = support;
  for (auto& s : report.originals) s.image_path = local_copy_name(s);
  report.annotation_path = out_dir / "annotations.json";
  SupportSet certified;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (failures[i]) {
      if (!keep_going) rethrow_failure(*failures[i]);
      report.failures.push_back(*failures[i]);
      continue;
    }
    certified.push_back(support[i]);
    for (auto& a : outputs[i]) report.augmented.push_back(std::move(a));
  }

  // Accounting check: K -> K * (n + 1) per class over the completed images.
  expand_support(certified, report.augmented, static_cast<int>(n_gen));
  emit_coco(report.originals, report.augmented, dataset.categories(), report.annotation_path);
  if (!report.failures.empty()) write_file_atomic(out_dir / "failures.json", failures_json(report.failures));
  return report;
}

RetrieveListing run_retrieve(const fs::path& query_path, const fs::path& index_path, const PipelineConfig& config,
                             ModelGateway& gateway) {
  validate_config(config);
  const BackgroundIndex index = load_index(index_path);
  const ImageBuffer query = read_png(query_path);
  const EmbeddingVector embedding = gateway.encode_image(query);
  const StyleVector style = style_vector(gateway.extract_feature_map(query));

  RetrieveListing listing;
  listing.semantic = retrieve_semantic(index, embedding, config.m);
  listing.reranked = rerank_style(index, listing.semantic, style, config.n_retrieve);
  listing.semantic_refs = refs_of(index, listing.semantic);
  listing.reranked_refs = refs_of(index, listing.reranked);
  return listing;
}

std::string retrieve_listing_json(const RetrieveListing& listing) {
  return Json{{"semantic", candidates_json(listing.semantic, listing.semantic_refs)},
              {"reranked", candidates_json(listing.reranked, listing.reranked_refs)}}
             .dump(1) +
         "\n";
}

RetrieveListing parse_retrieve_listing(std::string_view json) {
  try {
    const Json root = Json::parse(json);
    RetrieveListing listing;
    parse_candidates(root.at("semantic"), RetrievalStage::kSemantic, listing.semantic, listing.semantic_refs);
    parse_candidates(root.at("reranked"), RetrievalStage::kReranked, listing.reranked, listing.reranked_refs);
    return listing;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("retrieval listing: ") + e.what());
  }
}

MetricsReport run_metrics(const fs::path& target, const fs::path& generated_dir, ModelGateway& gateway) {
  const std::vector<fs::path> target_files = fs::is_directory(target) ? list_pngs(target) : std::vector{target};
  const std::vector<fs::path> generated_files = list_pngs(generated_dir);
  if (target_files.empty()) throw EmptyInputError(target.string() + " holds no PNG images");
  if (generated_files.empty()) throw EmptyInputError(generated_dir.string() + " holds no PNG images");

  auto encode_all = [&](const std::vector<fs::path>& files) {
    std::vector<EmbeddingVector> out;
    for (const auto& f : files) out.push_back(gateway.encode_image(read_png(f)));
    return FeatureSet(std::move(out));
  };
  const FeatureSet targets = encode_all(target_files);
  const FeatureSet generated = encode_all(generated_files);

  MetricsReport report;
  report.targets = targets.size();
  report.generated = generated.size();
  double sum = 0.0;
  for (const auto& t : targets.vectors()) sum += clip_i(t, generated);
  report.clip_i = sum / static_cast<double>(targets.size());
  if (targets.size() < 2 || generated.size() < 2) {
    report.fid_note = "fid needs at least 2 target and 2 generated images (got " + std::to_string(targets.size()) +
                      " and " + std::to_string(generated.size()) + ")";
  } else {
    report.fid = frechet_distance(fit_gaussian(targets), fit_gaussian(generated));
  }
  return report;
}

std::string metrics_json(const MetricsReport& report) {
  Json out{{"clip_i", report.clip_i}, {"targets", report.targets}, {"generated", report.generated}};
  if (report.fid) {
    out["fid"] = *report.fid;
  } else {
    out["fid_unavailable"] = report.fid_note;
  }
  return out.dump(1) + "\n";
}

Episode run_episode(const fs::path& dataset_path, const EpisodeSpec& spec, const std::optional<fs::path>& fixed,
                    const fs::path& out_dir) {
  const DetectionDataset dataset = load_coco(dataset_path);
  const Episode episode = fixed ? load_episode(dataset, *fixed) : sample_episode(dataset, spec);

  fs::create_directories(out_dir);
  const fs::path data_dir = canonical_dir(dataset_path);
  auto rerooted = [&](const DetectionDataset& ds) {
    std::vector<ImageInfo> images = ds.images();
    for (auto& img : images) img.file_name = relative_ref(data_dir / img.file_name, out_dir);
    return DetectionDataset(std::move(images), ds.annotations(), ds.categories());
  };
  write_file_atomic(out_dir / "episode.json", dump_episode(episode));
  write_coco(rerooted(subset(dataset, episode.support_image_ids(), episode.categories)), out_dir / "support.json");
  write_coco(rerooted(subset(dataset, episode.query_image_ids, episode.categories)), out_dir / "query.json");
  return episode;
}

}  // namespace domainrag
