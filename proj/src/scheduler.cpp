#include "hermes/scheduler.hpp"

#include "hermes/errors.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include <csignal>

namespace hermes {

const char* job_status_name(JobStatus status) {
    switch (status) {
        case JobStatus::completed: return "completed";
        case JobStatus::cancelled: return "cancelled";
        case JobStatus::crashed: return "crashed";
    }
    return "completed";
}

namespace detail {

struct SharedMetrics {
    mutable std::mutex mu;
    SchedulerMetrics m;
};

struct BatchState {
    std::mutex mu;
    std::condition_variable cv;
    std::vector<VerificationJob> jobs;
    size_t next = 0;
    std::vector<JobResult> results;
    bool cancelled = false;
    std::vector<pid_t> running; // per worker slot, -1 when idle
    std::vector<std::thread> threads;
    CheckerConfig checker;
    SchedulerConfig config;
    std::shared_ptr<SharedMetrics> metrics;
    std::chrono::steady_clock::time_point submitted_at;

    void push_result(JobResult result) {
        {
            std::lock_guard<std::mutex> lk(mu);
            results.push_back(std::move(result));
        }
        cv.notify_all();
    }

    void count(const JobResult& result) {
        if (!metrics) return;
        std::lock_guard<std::mutex> lk(metrics->mu);
        ++metrics->m.jobs_run;
        switch (result.status) {
            case JobStatus::completed:
                ++metrics->m.checker_requests;
                metrics->m.checker_seconds += result.outcome.report.elapsed;
                break;
            case JobStatus::cancelled: ++metrics->m.jobs_cancelled; break;
            case JobStatus::crashed: ++metrics->m.jobs_crashed; break;
        }
    }

    void count_respawn() {
        if (!metrics) return;
        std::lock_guard<std::mutex> lk(metrics->mu);
        ++metrics->m.respawns;
    }

    void count_latency(double seconds) {
        if (!metrics) return;
        std::lock_guard<std::mutex> lk(metrics->mu);
        metrics->m.queue_latency_seconds += seconds;
    }
};

namespace {

void worker_loop(std::shared_ptr<BatchState> st, int slot,
                 std::optional<CheckerHandle> handle) {
    bool had_handle = handle.has_value();
    for (;;) {
        VerificationJob job;
        {
            std::unique_lock<std::mutex> lk(st->mu);
            if (st->next >= st->jobs.size()) break;
            job = st->jobs[st->next++];
        }
        st->count_latency(std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - st->submitted_at)
                              .count());

        if (!handle || !handle->alive()) {
            std::string last_error;
            for (int attempt = 0; attempt < st->config.spawn_attempts; ++attempt) {
                try {
                    handle = CheckerHandle::start(st->checker);
                    if (had_handle) st->count_respawn();
                    had_handle = true;
                    break;
                } catch (const std::exception& e) {
                    handle.reset();
                    last_error = e.what();
                }
            }
            if (!handle) {
                JobResult res;
                res.job_id = job.job_id;
                res.tag = job.tag;
                res.status = JobStatus::crashed;
                res.error = "cannot start checker: " + last_error;
                st->count(res);
                st->push_result(std::move(res));
                continue;
            }
        }

        {
            std::lock_guard<std::mutex> lk(st->mu);
            if (st->cancelled) {
                JobResult res;
                res.job_id = job.job_id;
                res.tag = job.tag;
                res.status = JobStatus::cancelled;
                st->count(res);
                st->results.push_back(std::move(res));
                st->cv.notify_all();
                continue;
            }
            st->running[slot] = handle->pid();
        }

        JobResult res;
        res.job_id = job.job_id;
        res.tag = job.tag;
        try {
            res.outcome = handle->check_proof(job.source, job.timeout);
            res.status = JobStatus::completed;
        } catch (const CheckerCrashed& e) {
            std::lock_guard<std::mutex> lk(st->mu);
            if (st->cancelled) {
                res.status = JobStatus::cancelled;
            } else {
                res.status = JobStatus::crashed;
                res.error = e.what();
            }
        }

        {
            std::lock_guard<std::mutex> lk(st->mu);
            st->running[slot] = -1;
        }
        st->count(res);
        st->push_result(std::move(res));
    }
}

void cancel_batch(BatchState& st) {
    std::lock_guard<std::mutex> lk(st.mu);
    for (size_t i = st.next; i < st.jobs.size(); ++i) {
        JobResult res;
        res.job_id = st.jobs[i].job_id;
        res.tag = st.jobs[i].tag;
        res.status = JobStatus::cancelled;
        st.count(res);
        st.results.push_back(std::move(res));
    }
    st.next = st.jobs.size();
    if (!st.cancelled) {
        st.cancelled = true;
        for (pid_t pid : st.running) {
            if (pid > 0) ::kill(pid, SIGTERM);
        }
    }
    st.cv.notify_all();
}

} // namespace
} // namespace detail

BatchHandle::BatchHandle(std::shared_ptr<detail::BatchState> state)
    : state_(std::move(state)) {}

BatchHandle::~BatchHandle() {
    if (!state_) return;
    if (!complete()) cancel();
    join_workers();
}

BatchHandle& BatchHandle::operator=(BatchHandle&& other) noexcept {
    if (this != &other) {
        if (state_) {
            if (!complete()) cancel();
            join_workers();
        }
        state_ = std::move(other.state_);
    }
    return *this;
}

void BatchHandle::join_workers() {
    std::vector<std::thread> threads;
    {
        std::lock_guard<std::mutex> lk(state_->mu);
        threads.swap(state_->threads);
    }
    for (auto& t : threads) {
        if (t.joinable()) t.join();
    }
}

std::vector<JobResult> BatchHandle::await_all() {
    std::unique_lock<std::mutex> lk(state_->mu);
    state_->cv.wait(lk, [&] { return state_->results.size() == state_->jobs.size(); });
    return state_->results;
}

std::optional<JobResult> BatchHandle::await_first_conclusive(
    const std::function<bool(const JobResult&)>& conclusive) {
    size_t cursor = 0;
    std::unique_lock<std::mutex> lk(state_->mu);
    for (;;) {
        while (cursor < state_->results.size()) {
            JobResult candidate = state_->results[cursor];
            ++cursor;
            lk.unlock();
            bool hit = conclusive(candidate);
            if (hit) {
                cancel();
                await_all();
                return candidate;
            }
            lk.lock();
        }
        if (state_->results.size() == state_->jobs.size()) return std::nullopt;
        state_->cv.wait(lk);
    }
}

void BatchHandle::cancel() {
    if (state_) detail::cancel_batch(*state_);
}

bool BatchHandle::complete() const {
    std::lock_guard<std::mutex> lk(state_->mu);
    return state_->results.size() == state_->jobs.size();
}

std::vector<JobResult> BatchHandle::results_so_far() const {
    std::lock_guard<std::mutex> lk(state_->mu);
    return state_->results;
}

Scheduler::Scheduler(CheckerConfig checker, SchedulerConfig config)
    : checker_(std::move(checker)), config_(config),
      metrics_(std::make_shared<detail::SharedMetrics>()) {}

BatchHandle Scheduler::submit_batch(std::vector<VerificationJob> jobs, int workers) {
    auto state = std::make_shared<detail::BatchState>();
    state->jobs = std::move(jobs);
    state->checker = checker_;
    state->config = config_;
    state->metrics = metrics_;
    state->submitted_at = std::chrono::steady_clock::now();

    if (state->jobs.empty()) return BatchHandle(state);

    int n = workers > 0 ? workers : config_.default_workers;
    if (n < 1) n = 1;
    if (static_cast<size_t>(n) > state->jobs.size()) {
        n = static_cast<int>(state->jobs.size());
    }
    state->running.assign(static_cast<size_t>(n), -1);

    // One handle is started eagerly so a dead toolchain surfaces here
    // rather than as a pile of crashed job results.
    std::optional<CheckerHandle> first;
    try {
        first = CheckerHandle::start(checker_);
    } catch (const std::exception& e) {
        throw PoolExhausted(std::string("cannot start any checker: ") + e.what());
    }

    state->threads.reserve(static_cast<size_t>(n));
    for (int slot = 0; slot < n; ++slot) {
        std::optional<CheckerHandle> handle;
        if (slot == 0) handle = std::move(first);
        state->threads.emplace_back(detail::worker_loop, state, slot,
                                    std::move(handle));
    }
    return BatchHandle(state);
}

SchedulerMetrics Scheduler::metrics() const {
    std::lock_guard<std::mutex> lk(metrics_->mu);
    return metrics_->m;
}

} // namespace hermes
