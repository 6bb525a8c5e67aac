#pragma once

#include "promptaug/error.hpp"

#include <chrono>
#include <functional>
#include <string>
#include <thread>

namespace promptaug {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{250};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
}

/// Transport failures (status 0), 429 and 5xx are retried; everything else is final.
inline bool is_retryable(int status) noexcept {
    return status == 0 || status == 429 || status >= 500;
}

/// Calls fn(), retrying retryable BackendErrors with delays base, 2*base, 4*base, ...
/// Returns {result, attempts used}.
template <typename Fn>
auto retry_call(const RetryPolicy& policy, const Sleeper& sleep, Fn&& fn) -> std::pair<decltype(fn()), int> {
    auto delay = policy.backoff_base;
    for (int attempt = 1;; ++attempt) {
        try {
            return {fn(), attempt};
        } catch (const BackendError& e) {
            if (!is_retryable(e.status()) || attempt >= policy.max_attempts) {
                throw BackendError(std::string(e.what()) + " (after " + std::to_string(attempt) + " attempt" +
                                       (attempt == 1 ? "" : "s") + ")",
                                   e.status());
            }
        }
        sleep(delay);
        delay *= 2;
    }
}

} // namespace promptaug
