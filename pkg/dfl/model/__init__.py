"""From-scratch MLP kernel and flat-vector partitioning."""
