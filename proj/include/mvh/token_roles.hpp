// Copyright 2026 The mvh Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mvh {

using TokenId = std::int32_t;

enum class Role { system, image, text };

struct Segment {
  Role role;
  int view_id = 0;  // meaningful for Role::image only
  std::size_t start = 0;
  std::size_t length = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// A view's image tokens, tagged with a caller-assigned view id.
struct ViewTokens {
  int view_id;
  std::vector<TokenId> tokens;
};

class RoleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Token sequence annotated with role segments that tile [0, T).
///
/// Values are immutable; `with_generated` returns a new map with one more
/// text token at the end.
class RoleMap {
 public:
  /// Builds a map from explicit segments. Throws RoleError if the segments do
  /// not tile the token range, or if an image view id repeats.
  RoleMap(std::vector<TokenId> tokens, std::vector<Segment> segments);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<TokenId>& tokens() const { return tokens_; }
  const std::vector<Segment>& segments() const { return segments_; }

  Role role_at(std::size_t index) const { return roles_.at(index); }
  bool is_text(std::size_t index) const { return roles_.at(index) == Role::text; }

  /// Ascending indices covered by text segments.
  std::vector<std::size_t> text_indices() const;
  std::vector<std::size_t> image_indices() const;
  std::vector<std::size_t> system_indices() const;

  /// Length of the leading run of non-text tokens.
  std::size_t non_text_prefix() const;

  /// Appends a generated token to the trailing text segment (creating one if
  /// the sequence does not end in text).
  RoleMap with_generated(TokenId token) const;

  friend bool operator==(const RoleMap& a, const RoleMap& b) {
    return a.tokens_ == b.tokens_ && a.segments_ == b.segments_;
  }

 private:
  std::vector<TokenId> tokens_;
  std::vector<Segment> segments_;
  std::vector<Role> roles_;
};

/// Concatenates system, image views (in the given order) and text tokens.
/// Empty parts produce no segment. Throws RoleError on a duplicate view id or
/// when every part is empty.
RoleMap build_sequence(const std::vector<TokenId>& system_tokens,
                       const std::vector<ViewTokens>& views,
                       const std::vector<TokenId>& text_tokens);

/// Free-function spelling of RoleMap::text_indices.
inline std::vector<std::size_t> text_indices(const RoleMap& rm) { return rm.text_indices(); }

}  // namespace mvh
