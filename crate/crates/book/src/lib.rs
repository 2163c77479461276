//! Runs every snippet in `book/src` as a doc-test. Nothing here is meant
//! to be used as a library.

#[cfg(doctest)]
mod chapters {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/force-model.md")]
    pub struct ForceModel;
    #[doc = include_str!("../../../book/src/trajectories.md")]
    pub struct Trajectories;
    #[doc = include_str!("../../../book/src/estimation.md")]
    pub struct Estimation;
    #[doc = include_str!("../../../book/src/arena.md")]
    pub struct Arena;
    #[doc = include_str!("../../../book/src/steering.md")]
    pub struct Steering;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
