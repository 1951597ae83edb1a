#ifndef VGE_METRICS_HPP
#define VGE_METRICS_HPP

#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "vge/core.hpp"

namespace vge {

// One JSONL row per training event; field set is fixed so identical runs
// produce byte-identical files.
struct MetricsRow {
    std::int64_t iter = 0;
    std::string event;  // random | video | eval | train | error
    std::optional<int> task_id;
    std::optional<std::string> source;
    std::optional<bool> success;
    std::optional<int> episode_len;
    std::optional<double> loss;
    std::optional<int> buffer_size;
    std::int64_t cum_video_rollouts = 0;
    std::int64_t cum_video_successes = 0;
};

class MetricsWriter {
public:
    MetricsWriter() = default;  // inactive sink
    explicit MetricsWriter(const std::string& path);

    bool active() const { return out_.is_open(); }
    // First line of the file: run identity for traceability.
    void header(const std::map<std::string, std::string>& info);
    void row(const MetricsRow& r);
    void flush();

private:
    std::ofstream out_;
};

}  // namespace vge

#endif  // VGE_METRICS_HPP
