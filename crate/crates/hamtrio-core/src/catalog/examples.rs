//! The worked examples of the paper (built later).
