package com.fixture.text;

public class WordWrapper {

    private final int width;

    public WordWrapper(int width) {
        this.width = width;
    }

    public String wrap(String line) {
        if (line.length() <= width) {
            return line;
        }
        int cut = line.lastIndexOf(' ', width - 1);
        if (cut < 0) {
            return line.substring(0, width);
        }
        return line.substring(0, cut) + "\n" + wrap(line.substring(cut + 1));
    }
}
