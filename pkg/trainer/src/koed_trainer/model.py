"""Message-passing surrogate network and its training losses.

The parameter names and gate layouts deliberately match the tensor names of
the runtime weight-bundle format, so ``state_dict()`` exports directly.  The
recurrent cells are written as explicit matrix products because the
constraint penalty differentiates the prediction with respect to the edge
inputs and the optimizer then needs gradients of that gradient.
"""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F

from .data import GraphBatch


class _GRUCell(nn.Module):
    """Gate layout: reset, update, candidate."""

    def __init__(self, dim: int):
        super().__init__()
        self.weight_ih = nn.Parameter(torch.empty(3 * dim, dim))
        self.weight_hh = nn.Parameter(torch.empty(3 * dim, dim))
        self.bias_ih = nn.Parameter(torch.zeros(3 * dim))
        self.bias_hh = nn.Parameter(torch.zeros(3 * dim))
        bound = dim ** -0.5
        nn.init.uniform_(self.weight_ih, -bound, bound)
        nn.init.uniform_(self.weight_hh, -bound, bound)

    def forward(self, m: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
        d = h.shape[-1]
        gi = F.linear(m, self.weight_ih, self.bias_ih)
        gh = F.linear(h, self.weight_hh, self.bias_hh)
        r = torch.sigmoid(gi[..., :d] + gh[..., :d])
        z = torch.sigmoid(gi[..., d:2 * d] + gh[..., d:2 * d])
        n = torch.tanh(gi[..., 2 * d:] + r * gh[..., 2 * d:])
        return (1.0 - z) * n + z * h


class _LSTMCell(nn.Module):
    """Gate layout: input, forget, cell, output; input width 2*dim."""

    def __init__(self, dim: int):
        super().__init__()
        self.weight_ih = nn.Parameter(torch.empty(4 * dim, 2 * dim))
        self.weight_hh = nn.Parameter(torch.empty(4 * dim, dim))
        self.bias_ih = nn.Parameter(torch.zeros(4 * dim))
        self.bias_hh = nn.Parameter(torch.zeros(4 * dim))
        bound = dim ** -0.5
        nn.init.uniform_(self.weight_ih, -bound, bound)
        nn.init.uniform_(self.weight_hh, -bound, bound)

    def forward(self, x, h, c):
        d = h.shape[-1]
        g = F.linear(x, self.weight_ih, self.bias_ih) \
            + F.linear(h, self.weight_hh, self.bias_hh)
        i = torch.sigmoid(g[..., :d])
        f = torch.sigmoid(g[..., d:2 * d])
        gc = torch.tanh(g[..., 2 * d:3 * d])
        o = torch.sigmoid(g[..., 3 * d:])
        c_new = f * c + i * gc
        return o * torch.tanh(c_new), c_new


class _EdgeFilter(nn.Module):
    def __init__(self, dim: int, filter_hidden: int):
        super().__init__()
        self.fc1 = nn.Linear(2, filter_hidden)
        self.fc2 = nn.Linear(filter_hidden, dim * dim)


class _Head(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        self.fc1 = nn.Linear(2 * dim, dim)
        self.fc2 = nn.Linear(dim, 1)


class SurrogateNet(nn.Module):
    """Edge-conditioned message passing with a GRU state update, an
    attention-pooling (set2set-style) readout, and a two-layer head.
    Operates on the normalized label scale.  Trains in float32 for speed;
    call ``.double()`` when bit-level agreement with the float64 runtime is
    needed (export always writes doubles)."""

    def __init__(self, hidden_dim: int = 64, filter_hidden: int = 32,
                 message_steps: int = 3, set2set_steps: int = 3):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.filter_hidden = filter_hidden
        self.message_steps = message_steps
        self.set2set_steps = set2set_steps
        self.node_embed = nn.Linear(1, hidden_dim)
        self.ecc = _EdgeFilter(hidden_dim, filter_hidden)
        self.gru = _GRUCell(hidden_dim)
        self.set2set = _LSTMCell(hidden_dim)
        self.head = _Head(hidden_dim)

    def forward(self, nodes: torch.Tensor, edges: torch.Tensor,
                pairs: torch.Tensor) -> torch.Tensor:
        """nodes (B, N, 1), edges (B, P, 2), pairs (P, 2) -> (B,) normalized
        predictions."""
        dtype = self.node_embed.weight.dtype
        nodes = nodes.to(dtype)
        edges = edges.to(dtype)
        b, n, _ = nodes.shape
        d = self.hidden_dim
        h = F.relu(self.node_embed(nodes))                      # (B, N, d)
        hid = F.relu(self.ecc.fc1(edges))
        theta = self.ecc.fc2(hid).reshape(b, -1, d, d)          # (B, P, d, d)
        src, dst = pairs[:, 0], pairs[:, 1]
        for _ in range(self.message_steps):
            to_src = (theta @ h[:, dst].unsqueeze(-1)).squeeze(-1)
            to_dst = (theta @ h[:, src].unsqueeze(-1)).squeeze(-1)
            m = torch.zeros_like(h)
            m = m.index_add(1, src, to_src)
            m = m.index_add(1, dst, to_dst)
            h = self.gru(m, h)
        q_star = nodes.new_zeros(b, 2 * d)
        hs = nodes.new_zeros(b, d)
        cs = nodes.new_zeros(b, d)
        for _ in range(self.set2set_steps):
            hs, cs = self.set2set(q_star, hs, cs)
            energy = (h * hs.unsqueeze(1)).sum(-1)              # (B, N)
            alpha = torch.softmax(energy, dim=1)
            read = (alpha.unsqueeze(-1) * h).sum(1)
            q_star = torch.cat([hs, read], dim=-1)
        g = F.relu(self.head.fc1(q_star))
        return self.head.fc2(g).squeeze(-1)

    def forward_batch(self, batch: GraphBatch,
                      edges: torch.Tensor | None = None) -> torch.Tensor:
        return self(batch.nodes, batch.edges if edges is None else edges,
                    batch.pairs)


def constraint_penalty(y: torch.Tensor, edges: torch.Tensor) -> torch.Tensor:
    """Per-graph penalty on axiom-violating input gradients, summed over the
    batch: predictions must be non-increasing in each lower bound and
    non-decreasing in each upper bound."""
    (grad,) = torch.autograd.grad(y.sum(), edges, create_graph=True)
    viol = F.relu(grad[..., 0]) ** 2 + F.relu(-grad[..., 1]) ** 2
    return viol.sum()


def loss_terms(model: SurrogateNet, batch: GraphBatch, lam: float,
               with_penalty: bool = True
               ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(total, mse, penalty) on a batch; total = mse + lam * penalty.
    ``with_penalty=False`` skips the (second-order) penalty computation and
    reports it as zero, which leaves the total unchanged only when lam = 0.
    Raises on a non-finite loss with batch diagnostics."""
    dtype = model.node_embed.weight.dtype
    edges = batch.edges.detach().to(dtype).requires_grad_(True)
    labels = batch.labels.to(dtype)
    y = model.forward_batch(batch, edges=edges)
    mse = torch.mean((y - labels) ** 2)
    if with_penalty:
        pen = constraint_penalty(y, edges)
    else:
        pen = y.new_zeros(())
    total = mse + lam * pen
    if not torch.isfinite(total):
        raise RuntimeError(
            f"non-finite loss: mse={mse.detach().item()}, "
            f"penalty={pen.detach().item()}, "
            f"batch size {batch.labels.shape[0]}, graph size {batch.n}, "
            f"label range [{float(batch.labels.min())}, "
            f"{float(batch.labels.max())}]")
    return total, mse, pen
