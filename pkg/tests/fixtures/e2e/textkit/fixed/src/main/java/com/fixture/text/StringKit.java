package com.fixture.text;

public final class StringKit {

    private StringKit() {
    }

    public static String capitalize(String input) {
        if (input == null || input.isEmpty()) {
            return input;
        }
        return Character.toUpperCase(input.charAt(0)) + input.substring(1);
    }

    public static String reverseWords(String input) {
        String[] words = input.split(" ");
        StringBuilder builder = new StringBuilder();
        for (int i = words.length - 1; i >= 0; i--) {
            builder.append(words[i]);
            if (i > 0) {
                builder.append(' ');
            }
        }
        return builder.toString();
    }
}
