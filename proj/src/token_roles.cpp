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

#include "mvh/token_roles.hpp"

#include <set>
#include <string>

namespace mvh {

RoleMap::RoleMap(std::vector<TokenId> tokens, std::vector<Segment> segments)
    : tokens_(std::move(tokens)), segments_(std::move(segments)) {
  std::size_t cursor = 0;
  std::set<int> views;
  roles_.reserve(tokens_.size());
  for (const Segment& s : segments_) {
    if (s.start != cursor) {
      throw RoleError("segments must tile the sequence: gap or overlap at index " +
                      std::to_string(cursor));
    }
    if (s.length == 0) {
      throw RoleError("segments must be non-empty");
    }
    if (s.role == Role::image && !views.insert(s.view_id).second) {
      throw RoleError("duplicate view id " + std::to_string(s.view_id));
    }
    roles_.insert(roles_.end(), s.length, s.role);
    cursor += s.length;
  }
  if (cursor != tokens_.size()) {
    throw RoleError("segments cover " + std::to_string(cursor) + " of " +
                    std::to_string(tokens_.size()) + " tokens");
  }
}

namespace {
std::vector<std::size_t> indices_with(const std::vector<Role>& roles, Role role) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == role) out.push_back(i);
  }
  return out;
}
}  // namespace

std::vector<std::size_t> RoleMap::text_indices() const { return indices_with(roles_, Role::text); }
std::vector<std::size_t> RoleMap::image_indices() const { return indices_with(roles_, Role::image); }
std::vector<std::size_t> RoleMap::system_indices() const {
  return indices_with(roles_, Role::system);
}

std::size_t RoleMap::non_text_prefix() const {
  std::size_t n = 0;
  while (n < roles_.size() && roles_[n] != Role::text) ++n;
  return n;
}

RoleMap RoleMap::with_generated(TokenId token) const {
  auto tokens = tokens_;
  auto segments = segments_;
  tokens.push_back(token);
  if (!segments.empty() && segments.back().role == Role::text) {
    ++segments.back().length;
  } else {
    segments.push_back({Role::text, 0, tokens_.size(), 1});
  }
  return RoleMap(std::move(tokens), std::move(segments));
}

RoleMap build_sequence(const std::vector<TokenId>& system_tokens,
                       const std::vector<ViewTokens>& views,
                       const std::vector<TokenId>& text_tokens) {
  std::vector<TokenId> tokens;
  std::vector<Segment> segments;
  auto add = [&](Role role, int view_id, const std::vector<TokenId>& part) {
    if (part.empty()) return;
    segments.push_back({role, view_id, tokens.size(), part.size()});
    tokens.insert(tokens.end(), part.begin(), part.end());
  };
  std::set<int> seen;
  for (const auto& v : views) {
    if (!seen.insert(v.view_id).second) {
      throw RoleError("duplicate view id " + std::to_string(v.view_id));
    }
  }
  add(Role::system, 0, system_tokens);
  for (const auto& v : views) add(Role::image, v.view_id, v.tokens);
  add(Role::text, 0, text_tokens);
  if (tokens.empty()) {
    throw RoleError("build_sequence: all parts are empty");
  }
  return RoleMap(std::move(tokens), std::move(segments));
}

}  // namespace mvh
