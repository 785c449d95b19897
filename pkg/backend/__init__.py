# This file makes Python treat the directory as a package
# Similar to how Node.js uses index.js for package entry points
