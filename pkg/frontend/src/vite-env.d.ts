// keeps plain `tsc` happy about the styles.css side-effect import;
// vite itself resolves the real asset at build time
declare module "*.css";
