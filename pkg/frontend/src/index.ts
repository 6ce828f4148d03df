export * from "./api";
export * from "./client";
export * from "./state";
export * from "./explorer";
export * from "./graph-view";
export * from "./sequential-view";
export * from "./data-view";
