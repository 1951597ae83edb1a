#include "vge/metrics.hpp"

#include <nlohmann/json.hpp>

namespace vge {

using ordered_json = nlohmann::ordered_json;

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open metrics file: " + path);
}

void MetricsWriter::header(const std::map<std::string, std::string>& info) {
    if (!active()) return;
    ordered_json j;
    j["event"] = "header";
    for (const auto& [k, v] : info) j[k] = v;
    out_ << j.dump() << '\n';
}

void MetricsWriter::row(const MetricsRow& r) {
    if (!active()) return;
    ordered_json j;
    j["iter"] = r.iter;
    j["event"] = r.event;
    j["task_id"] = r.task_id ? ordered_json(*r.task_id) : ordered_json(nullptr);
    j["source"] = r.source ? ordered_json(*r.source) : ordered_json(nullptr);
    j["success"] = r.success ? ordered_json(*r.success) : ordered_json(nullptr);
    j["episode_len"] = r.episode_len ? ordered_json(*r.episode_len) : ordered_json(nullptr);
    j["loss"] = r.loss ? ordered_json(*r.loss) : ordered_json(nullptr);
    j["buffer_size"] = r.buffer_size ? ordered_json(*r.buffer_size) : ordered_json(nullptr);
    j["cum_video_rollouts"] = r.cum_video_rollouts;
    j["cum_video_successes"] = r.cum_video_successes;
    out_ << j.dump() << '\n';
}

void MetricsWriter::flush() {
    if (active()) out_.flush();
}

}  // namespace vge
