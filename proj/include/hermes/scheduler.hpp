#pragma once

#include "hermes/lean_bridge.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hermes {

struct VerificationJob {
    std::string job_id; // unique within a batch
    std::string source;
    double timeout = -1.0; // <= 0 selects the checker default
    std::string tag;       // caller label, e.g. "goal-sample-3"
};

enum class JobStatus { completed, cancelled, crashed };

const char* job_status_name(JobStatus status);

struct JobResult {
    std::string job_id;
    std::string tag;
    JobStatus status = JobStatus::completed;
    ProofOutcome outcome; // meaningful when status == completed
    std::string error;    // crash detail
};

struct SchedulerMetrics {
    long long jobs_run = 0;
    long long jobs_cancelled = 0;
    long long jobs_crashed = 0;
    long long respawns = 0;
    long long checker_requests = 0;
    double checker_seconds = 0.0;
    double queue_latency_seconds = 0.0;
};

namespace detail {
struct BatchState;
struct SharedMetrics;
} // namespace detail

// Single-consumer view of one submitted batch. Results accumulate in
// completion order; every submitted job yields exactly one result, whether
// it ran, crashed, or was cancelled. Dropping an incomplete handle cancels
// the batch.
class BatchHandle {
public:
    BatchHandle() = default;
    ~BatchHandle();
    BatchHandle(BatchHandle&&) noexcept = default;
    BatchHandle& operator=(BatchHandle&&) noexcept;
    BatchHandle(const BatchHandle&) = delete;
    BatchHandle& operator=(const BatchHandle&) = delete;

    // Blocks until every job has a result.
    std::vector<JobResult> await_all();

    // First result satisfying `conclusive`, in arrival order. Cancels the
    // remaining jobs (which still produce cancelled results) and waits for
    // the batch to drain. nullopt when no result satisfies the predicate.
    std::optional<JobResult> await_first_conclusive(
        const std::function<bool(const JobResult&)>& conclusive);

    // Unfinished jobs become cancelled; running checkers are terminated.
    // Idempotent; does not block.
    void cancel();

    bool complete() const;
    std::vector<JobResult> results_so_far() const;

private:
    friend class Scheduler;
    explicit BatchHandle(std::shared_ptr<detail::BatchState> state);
    void join_workers();

    std::shared_ptr<detail::BatchState> state_;
};

struct SchedulerConfig {
    int default_workers = 2;
    int spawn_attempts = 2; // tries per worker when a live handle is needed
};

// Fans verification jobs out across short-lived worker pools, one checker
// subprocess per worker. Safe for concurrent submission.
class Scheduler {
public:
    explicit Scheduler(CheckerConfig checker, SchedulerConfig config = {});

    // Throws PoolExhausted when not even one checker can be started.
    // workers <= 0 selects the configured default; the pool never exceeds
    // the job count.
    BatchHandle submit_batch(std::vector<VerificationJob> jobs, int workers = 0);

    SchedulerMetrics metrics() const;
    const CheckerConfig& checker_config() const { return checker_; }
    const SchedulerConfig& config() const { return config_; }

private:
    CheckerConfig checker_;
    SchedulerConfig config_;
    std::shared_ptr<detail::SharedMetrics> metrics_;
};

} // namespace hermes
