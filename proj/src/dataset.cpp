#include "evt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>

namespace evt {

namespace {

constexpr double kEventGap = 0.25;  // minimum spacing between sampled events

std::vector<double> unit_vector(int d, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(d));
    double ss = 0.0;
    for (double& x : v) {
        x = rng.normal();
        ss += x * x;
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (double& x : v) x *= inv;
    return v;
}

// Templates for classes 1..C. Classes are paired: (1,2), (3,4), ... share a
// base direction weighted by visual_ambiguity, so high ambiguity makes the
// pair visually indistinguishable while the prompt oracle still separates it.
std::vector<std::vector<double>> make_templates(const GenSpec& spec, std::uint64_t seed) {
    Rng rng = Rng(seed).fork(0x7E3A91);
    const int pairs = (spec.num_classes + 1) / 2;
    std::vector<std::vector<double>> base;
    base.reserve(static_cast<std::size_t>(pairs));
    for (int p = 0; p < pairs; ++p) base.push_back(unit_vector(spec.d_v, rng));

    std::vector<std::vector<double>> templates;
    const double wb = std::sqrt(spec.visual_ambiguity);
    const double wu = std::sqrt(1.0 - spec.visual_ambiguity);
    for (int c = 1; c <= spec.num_classes; ++c) {
        const std::vector<double> unique = unit_vector(spec.d_v, rng);
        const std::vector<double>& b = base[(c - 1) / 2];
        std::vector<double> t(static_cast<std::size_t>(spec.d_v));
        double ss = 0.0;
        for (int j = 0; j < spec.d_v; ++j) {
            t[j] = wb * b[j] + wu * unique[j];
            ss += t[j] * t[j];
        }
        const double inv = spec.template_scale / std::sqrt(ss);
        for (double& x : t) x *= inv;
        templates.push_back(std::move(t));
    }
    return templates;
}

std::vector<ScriptEvent> sample_events(const GenSpec& spec, double duration, Rng& rng) {
    int wanted = spec.events_min +
                 static_cast<int>(rng.uniform_index(
                     static_cast<std::uint64_t>(spec.events_max - spec.events_min + 1)));
    for (int attempt = 0; attempt < 500; ++attempt) {
        // A tight duration may not fit the drawn count; shed one event every
        // 100 failed packings before giving up entirely.
        if (attempt > 0 && attempt % 100 == 0 && wanted > spec.events_min) --wanted;
        std::vector<ScriptEvent> events;
        bool ok = true;
        for (int e = 0; e < wanted && ok; ++e) {
            bool placed = false;
            for (int tries = 0; tries < 50; ++tries) {
                const double len = std::min(rng.uniform(spec.event_len_min, spec.event_len_max),
                                            duration);
                const double start = rng.uniform(0.0, duration - len);
                const Span candidate{start, start + len};
                bool clash = false;
                for (const auto& prev : events) {
                    const Span padded{prev.start_sec - kEventGap, prev.end_sec + kEventGap};
                    if (overlap_length(candidate, padded) > 0.0) {
                        clash = true;
                        break;
                    }
                }
                if (!clash) {
                    const int cls = 1 + static_cast<int>(rng.uniform_index(
                                            static_cast<std::uint64_t>(spec.num_classes)));
                    events.push_back({cls, candidate.start_sec, candidate.end_sec});
                    placed = true;
                    break;
                }
            }
            if (!placed) ok = false;
        }
        if (ok) {
            std::sort(events.begin(), events.end(),
                      [](const ScriptEvent& a, const ScriptEvent& b) {
                          return a.start_sec < b.start_sec;
                      });
            return events;
        }
    }
    throw GenerationError("could not pack " + std::to_string(wanted) +
                          " events into a video of " + std::to_string(duration) + " s");
}

int dominant_label(const std::vector<ScriptEvent>& events) {
    int label = kBackgroundClass;
    double longest = -1.0;
    for (const auto& e : events) {
        const double len = e.end_sec - e.start_sec;
        if (len > longest) {
            longest = len;
            label = e.class_id;
        }
    }
    return label;
}

std::string video_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%04d", index);
    return buf;
}

std::string encode_doubles_le(std::span<const double> values) {
    std::string bytes(values.size() * 8, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t u;
        std::memcpy(&u, &values[i], 8);
        for (int b = 0; b < 8; ++b)
            bytes[i * 8 + b] = static_cast<char>((u >> (8 * b)) & 0xFF);
    }
    return bytes;
}

std::vector<double> decode_doubles_le(const std::string& bytes) {
    if (bytes.size() % 8 != 0) throw IoError("feature file length is not a multiple of 8");
    std::vector<double> values(bytes.size() / 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b)
            u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b]))
                 << (8 * b);
        std::memcpy(&values[i], &u, 8);
    }
    return values;
}

std::vector<Span> tile_spans(int tokens, double duration) {
    std::vector<Span> spans;
    spans.reserve(static_cast<std::size_t>(tokens));
    for (int i = 0; i < tokens; ++i)
        spans.push_back({duration * i / tokens, duration * (i + 1) / tokens});
    return spans;
}

}  // namespace

std::vector<int> SyntheticDataset::indices_of(const std::string& split) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(videos.size()); ++i)
        if (videos[i].split == split) out.push_back(i);
    return out;
}

std::vector<double> class_template(const GenSpec& spec, std::uint64_t seed, int class_id) {
    if (class_id < 1 || class_id > spec.num_classes)
        throw VocabularyError("class template requested for id " + std::to_string(class_id));
    return make_templates(spec, seed)[static_cast<std::size_t>(class_id - 1)];
}

SyntheticDataset generate_dataset(const GenSpec& spec, std::uint64_t seed) {
    validate_gen_spec(spec);

    SyntheticDataset data;
    data.num_classes = spec.num_classes;
    data.d_v = spec.d_v;
    data.d_p = spec.d_p;
    data.clip_len = spec.clip_len;
    data.clip_stride = spec.clip_stride;
    data.embed_seed = seed;

    const auto templates = make_templates(spec, seed);
    Rng rng = Rng(seed).fork(0x5CE9A7);
    const ClipPolicy policy{spec.clip_len, spec.clip_stride};

    const int total = spec.num_train + spec.num_val;
    for (int v = 0; v < total; ++v) {
        const double duration = rng.uniform(spec.duration_min, spec.duration_max);

        EventScript script;
        script.video_id = video_name(v);
        script.video_duration_sec = duration;
        script.events = sample_events(spec, duration, rng);
        script.global_label = dominant_label(script.events);
        validate_script(script);

        const auto spans = tile_spans(spec.tokens_per_video, duration);
        std::vector<double> features(static_cast<std::size_t>(spec.tokens_per_video) * spec.d_v);
        for (int i = 0; i < spec.tokens_per_video; ++i) {
            const double center = span_center(spans[i]);
            int cls = kBackgroundClass;
            for (const auto& e : script.events)
                if (center >= e.start_sec && center < e.end_sec) {
                    cls = e.class_id;
                    break;
                }
            for (int j = 0; j < spec.d_v; ++j) {
                double value = spec.noise_sigma * rng.normal();
                if (cls != kBackgroundClass) value += templates[cls - 1][j];
                features[static_cast<std::size_t>(i) * spec.d_v + j] = value;
            }
        }

        DatasetVideo video;
        video.features.tokens =
            Tensor::from_data({spec.tokens_per_video, spec.d_v}, std::move(features));
        video.features.spans = spans;
        video.features.video_id = script.video_id;
        video.script = script;
        video.bundle = build_bundle(script, policy, spec.d_p, seed, spec.num_classes);
        video.split = v < spec.num_train ? "train" : "val";
        data.videos.push_back(std::move(video));
    }
    return data;
}

void write_dataset(const SyntheticDataset& data, const std::string& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json videos = nlohmann::json::array();
    for (const auto& video : data.videos) {
        const std::string& id = video.features.video_id;
        const std::string vdir = dir + "/" + id;
        atomic_write_file(vdir + "/features.f32",
                          encode_doubles_le(video.features.tokens.data()));
        atomic_write_file(vdir + "/script.json", script_to_json(video.script).dump(2) + "\n");
        atomic_write_file(vdir + "/bundle.json", bundle_to_json(video.bundle).dump(2) + "\n");
        videos.push_back({{"video_id", id},
                          {"split", video.split},
                          {"l", video.features.tokens.rows()},
                          {"d_in", video.features.tokens.cols()},
                          {"duration_sec", video.script.video_duration_sec}});
    }

    nlohmann::json manifest = {{"num_classes", data.num_classes},
                               {"d_v", data.d_v},
                               {"d_p", data.d_p},
                               {"clip_len", data.clip_len},
                               {"clip_stride", data.clip_stride},
                               {"embed_seed", data.embed_seed},
                               {"videos", videos}};
    atomic_write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

SyntheticDataset read_dataset(const std::string& dir) {
    const nlohmann::json manifest = nlohmann::json::parse(read_file(dir + "/manifest.json"));

    SyntheticDataset data;
    data.num_classes = manifest.at("num_classes").get<int>();
    data.d_v = manifest.at("d_v").get<int>();
    data.d_p = manifest.at("d_p").get<int>();
    data.clip_len = manifest.at("clip_len").get<double>();
    data.clip_stride = manifest.at("clip_stride").get<double>();
    data.embed_seed = manifest.at("embed_seed").get<std::uint64_t>();

    for (const auto& entry : manifest.at("videos")) {
        const std::string id = entry.at("video_id").get<std::string>();
        const std::string vdir = dir + "/" + id;
        const int l = entry.at("l").get<int>();
        const int d_in = entry.at("d_in").get<int>();
        const double duration = entry.at("duration_sec").get<double>();

        DatasetVideo video;
        video.split = entry.at("split").get<std::string>();
        std::vector<double> values = decode_doubles_le(read_file(vdir + "/features.f32"));
        if (values.size() != static_cast<std::size_t>(l) * d_in)
            throw IoError("feature file size mismatch for video " + id);
        video.features.tokens = Tensor::from_data({l, d_in}, std::move(values));
        video.features.spans = tile_spans(l, duration);
        video.features.video_id = id;
        video.script = script_from_json(nlohmann::json::parse(read_file(vdir + "/script.json")));
        video.bundle = bundle_from_json(nlohmann::json::parse(read_file(vdir + "/bundle.json")));
        data.videos.push_back(std::move(video));
    }
    return data;
}

}  // namespace evt
