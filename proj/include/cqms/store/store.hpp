#pragma once

#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cqms/store/types.hpp"

namespace cqms::store {

/// Append-only vector whose chunks are shared between copies. Copying is
/// O(size / N); writing into a chunk that another copy still sees clones
/// that chunk first.
template <typename T, std::size_t N = 1024>
class ChunkedVector {
 public:
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const T& operator[](std::size_t i) const { return (*chunks_[i / N])[i % N]; }

  void push_back(T value) {
    if (size_ % N == 0) {
      chunks_.push_back(std::make_shared<std::vector<T>>());
      chunks_.back()->reserve(N);
    }
    own(chunks_.size() - 1).push_back(std::move(value));
    ++size_;
  }

  void set(std::size_t i, T value) { own(i / N)[i % N] = std::move(value); }

 private:
  std::vector<T>& own(std::size_t c) {
    if (chunks_[c].use_count() > 1) {
      auto copy = std::make_shared<std::vector<T>>(*chunks_[c]);
      copy->reserve(N);
      chunks_[c] = std::move(copy);
    }
    return *chunks_[c];
  }

  std::vector<std::shared_ptr<std::vector<T>>> chunks_;
  std::size_t size_ = 0;
};

struct ScanFilter {
  std::optional<std::string> owner;
  std::optional<std::string> group;
  std::optional<EpochMs> from;  // inclusive
  std::optional<EpochMs> to;    // exclusive
  /// Validities to include; deleted queries are never yielded.
  std::set<Validity> validity = {Validity::kValid, Validity::kFlaggedSchema};
};

/// An immutable view of the store as of one sequence number. Pointers it
/// hands out stay valid for as long as the snapshot is alive.
class Snapshot {
 public:
  Seq seq() const { return seq_; }
  /// Number of qids ever assigned, deleted ones included.
  std::size_t query_count() const { return queries_.size(); }

  /// Any record including tombstoned ones; nullptr if the qid was never used.
  const StoredQuery* find(Qid qid) const;
  /// Throws NotFound, or Deleted for a tombstoned query.
  const StoredQuery& get(Qid qid) const;
  /// Like get, but an invisible query is reported as NotFound.
  const StoredQuery& get(Qid qid, const Principal& principal) const;

  /// Visible, non-deleted queries matching the filter, newest first.
  std::vector<const StoredQuery*> scan(const ScanFilter& filter, const Principal& principal) const;

  /// Calls fn for every non-deleted query in qid order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t i = 0; i < queries_.size(); ++i)
      if (queries_[i]->validity != Validity::kDeleted) fn(*queries_[i]);
  }

  std::size_t edge_count() const { return edges_.size(); }
  const SessionEdge& edge(std::size_t i) const { return edges_[i]; }

  bool has_schema() const { return !schemas_.empty(); }
  /// The snapshot with the greatest effective_at; throws NoSchema.
  const sql::SchemaSnapshot& current_schema() const;
  const sql::SchemaSnapshot* current_schema_or_null() const;
  std::size_t schema_count() const { return schemas_.size(); }

  std::shared_ptr<const OutputSummary> summary(std::uint64_t id) const;

  /// Canonical JSON of the whole derived state; equal states give equal bytes.
  std::string dump_index() const;

 private:
  friend class Store;

  Seq seq_ = 0;
  ChunkedVector<std::shared_ptr<const StoredQuery>> queries_;  // index qid - 1
  ChunkedVector<std::shared_ptr<const OutputSummary>> summaries_;  // index qid - 1
  ChunkedVector<SessionEdge> edges_;
  std::vector<std::shared_ptr<const sql::SchemaSnapshot>> schemas_;  // append order
  std::size_t current_schema_ = 0;
};

struct StoreOptions {
  /// Log file; empty keeps everything in memory.
  std::string path;
  std::function<EpochMs()> clock;
};

/// The event-sourced query store. One writer at a time (appends are
/// serialized internally); readers take snapshots and never block it.
class Store {
 public:
  explicit Store(StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  std::shared_ptr<const Snapshot> snapshot() const;
  Seq seq() const { return snapshot()->seq(); }
  EpochMs now() const { return clock_(); }
  const std::string& path() const { return path_; }

  /// Appends one event and returns its sequence number. For QueryAdded the
  /// qid is assigned here; see add_query. Throws DanglingReference, Deleted,
  /// InvalidArgument or IOFailure.
  Seq append(Event event);
  /// Appends a QueryAdded event (and its summary record) and returns the qid.
  Qid add_query(StoredQuery query, std::optional<OutputSummary> summary = std::nullopt);

  /// Groups appends so readers see them all at once when the batch ends.
  class Batch {
   public:
    explicit Batch(Store& store);
    ~Batch();
    Batch(const Batch&) = delete;
    Batch& operator=(const Batch&) = delete;

   private:
    Store& store_;
    std::unique_lock<std::recursive_mutex> lock_;
  };

  /// Forces the log to stable storage.
  void sync();

 private:
  struct Applied {
    Seq seq;
    Qid qid;
  };
  Applied apply_locked(Event& event, EpochMs at, bool replaying);
  void validate(const Event& event) const;
  void write_record(Seq seq, const Event& event, EpochMs at);
  void write_summary(const OutputSummary& summary);
  void replay();
  void publish();

  std::string path_;
  std::function<EpochMs()> clock_;
  std::FILE* log_ = nullptr;
  std::FILE* summaries_ = nullptr;

  mutable std::recursive_mutex writer_;
  int batch_depth_ = 0;
  Snapshot working_;

  mutable std::mutex publish_mutex_;
  std::shared_ptr<const Snapshot> published_;
};

}  // namespace cqms::store
