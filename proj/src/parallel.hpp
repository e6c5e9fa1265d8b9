#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tightlab/exec.hpp"

namespace tightlab::detail {

// Lowest failing index wins, so the rethrown error does not depend on scheduling.
class FirstError {
 public:
  void record(std::size_t index, std::exception_ptr e) {
#pragma omp critical(tightlab_first_error)
    {
      if (index < index_) {
        index_ = index;
        error_ = std::move(e);
      }
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::size_t index_ = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error_;
};

/// body(i, counts) adds integer counts for item i. Integer sums make the
/// result independent of thread count and schedule.
template <class Body>
std::vector<std::uint64_t> count_items(std::size_t items, std::size_t cells, Exec exec, Body&& body) {
  std::vector<std::uint64_t> total(cells, 0);
  FirstError err;
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < items; ++i) {
      try {
        body(i, std::span<std::uint64_t>(total));
      } catch (...) {
        err.record(i, std::current_exception());
        break;
      }
    }
    err.rethrow();
    return total;
  }
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(cells, 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(items); ++i) {
      try {
        body(static_cast<std::size_t>(i), std::span<std::uint64_t>(local));
      } catch (...) {
        err.record(static_cast<std::size_t>(i), std::current_exception());
      }
    }
#pragma omp critical(tightlab_count_merge)
    for (std::size_t c = 0; c < cells; ++c) total[c] += local[c];
  }
  err.rethrow();
  return total;
}

/// out[i] = body(i); each slot is written by exactly one iteration.
template <class Body>
void fill_items(std::span<double> out, Exec exec, Body&& body) {
  FirstError err;
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      try {
        out[i] = body(i);
      } catch (...) {
        err.record(i, std::current_exception());
        break;
      }
    }
    err.rethrow();
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(out.size()); ++i) {
    try {
      out[static_cast<std::size_t>(i)] = body(static_cast<std::size_t>(i));
    } catch (...) {
      err.record(static_cast<std::size_t>(i), std::current_exception());
    }
  }
  err.rethrow();
}

}  // namespace tightlab::detail
