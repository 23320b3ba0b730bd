#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace forge {

/// A non-fatal problem recorded while processing a batch, e.g. a skipped group.
struct Issue {
    std::string stage;
    std::string subject;
    std::string reason;

    bool operator==(const Issue&) const = default;
};

// Shared report sink. Workers append concurrently; readers take a snapshot.
class IssueLog {
public:
    void add(std::string stage, std::string subject, std::string reason) {
        std::lock_guard lock(mutex_);
        issues_.push_back({std::move(stage), std::move(subject), std::move(reason)});
    }

    std::vector<Issue> snapshot() const {
        std::lock_guard lock(mutex_);
        return issues_;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return issues_.size();
    }

private:
    mutable std::mutex mutex_;
    std::vector<Issue> issues_;
};

inline void note(IssueLog* log, std::string stage, std::string subject, std::string reason) {
    if (log) log->add(std::move(stage), std::move(subject), std::move(reason));
}

}  // namespace forge
