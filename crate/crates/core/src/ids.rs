//! Dense internal identifiers.
//!
//! Users, items and groups are addressed by contiguous indices starting at
//! zero. External identifiers (MovieLens IDs, genre names) live in the
//! dataset and mapping types.

use std::fmt;

macro_rules! dense_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn new(index: usize) -> Self {
                $name(u32::try_from(index).expect("index exceeds u32 range"))
            }

            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

dense_id!(
    /// Internal user index.
    UserId
);
dense_id!(
    /// Internal item index.
    ItemId
);
dense_id!(
    /// Item group (genre) index.
    GroupId
);
